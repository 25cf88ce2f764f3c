use std::collections::BTreeMap;

use super::{counts_are_ulc, counts_pmf, size_entropy_report};
use crate::compound::CompoundingDist;
use crate::error::{Error, Result};
use crate::info::{entropy_nats, poisson_entropy_upper};
use crate::pmf::Pmf;
use crate::verify::{Hypothesis, Settings, VerificationReport, ENTROPY_SLACK};

/// Largest vertex count handled; vertex sets are `u32` bitmasks.
pub const MAX_VERTICES: usize = 30;

/// Undirected graph without loops or multiple edges on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    adj: Vec<u32>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::TooLarge { what: "graph", size: n, limit: MAX_VERTICES });
        }
        let mut adj = vec![0u32; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) leaves 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Ok(SimpleGraph { n, adj })
    }

    /// Parse `"n\nu v\n..."`. Blank lines and lines starting with `#` are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n = lines
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count".into()))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [u, v] = parts[..] else {
                return Err(Error::Parse(format!("expected two vertices, got {line:?}")));
            };
            let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{line:?}: {e}")));
            edges.push((parse(u)?, parse(v)?));
        }
        Self::new(n, &edges)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, &[])
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges)
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("a cycle needs 3 vertices, got {n}")));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::new(n, &edges)
    }

    /// `K_{1,leaves}` with center 0.
    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
        Self::new(leaves + 1, &edges)
    }

    /// Vertices are the edges of `self` in [`edges`](Self::edges) order,
    /// adjacent when they share an endpoint.
    pub fn line_graph(&self) -> Result<Self> {
        let e = self.edges();
        let mut out = Vec::new();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                let (a, b) = (e[i], e[j]);
                if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
                    out.push((i, j));
                }
            }
        }
        Self::new(e.len(), &out)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|u| (u + 1..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v))).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> u32 {
        self.adj[v]
    }

    pub fn is_independent(&self, set: u32) -> bool {
        (0..self.n).filter(|&v| set >> v & 1 == 1).all(|v| self.adj[v] & set == 0)
    }

    /// No vertex has three pairwise non-adjacent neighbors.
    pub fn is_claw_free(&self) -> bool {
        (0..self.n).all(|v| {
            let nb: Vec<usize> = bits(self.adj[v]).collect();
            !nb.iter().enumerate().any(|(i, &a)| {
                nb[i + 1..].iter().enumerate().any(|(j, &b)| {
                    !self.has_edge(a, b)
                        && nb[i + j + 2..].iter().any(|&c| !self.has_edge(a, c) && !self.has_edge(b, c))
                })
            })
        })
    }
}

fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            v
        })
    })
}

/// `I_k`, the number of independent sets of size `k`, for `k = 0..=alpha(G)`.
///
/// Branches on the lowest remaining vertex `v`: sets avoiding `v`, plus sets
/// containing `v` on the graph with `v` and its neighbors removed. Isolated
/// vertices contribute a factor `1 + x` directly.
pub fn enumerate_independent_sets(g: &SimpleGraph) -> Vec<u64> {
    let all = ((1u64 << g.n) - 1) as u32;
    let mut memo = BTreeMap::new();
    independence_poly(g, all, &mut memo)
}

fn independence_poly(g: &SimpleGraph, mask: u32, memo: &mut BTreeMap<u32, Vec<u64>>) -> Vec<u64> {
    if mask == 0 {
        return vec![1];
    }
    if let Some(p) = memo.get(&mask) {
        return p.clone();
    }
    let v = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << v);
    let without = independence_poly(g, rest, memo);
    let with = if g.adj[v] & mask == 0 { without.clone() } else { independence_poly(g, rest & !g.adj[v], memo) };
    let mut out = vec![0u64; without.len().max(with.len() + 1)];
    for (k, c) in without.iter().enumerate() {
        out[k] += c;
    }
    for (k, c) in with.iter().enumerate() {
        out[k + 1] += c;
    }
    memo.insert(mask, out.clone());
    out
}

/// Law of `|I|` for `I` uniform over independent sets.
pub fn independent_set_pmf(counts: &[u64]) -> Result<Pmf> {
    counts_pmf(counts)
}

/// Law of `sum_{i in I} X_i` with `I` uniform over the independent sets of
/// `g` and `X_i ~ Q` i.i.d., by enumerating every independent set and every
/// weight assignment. Meant for small graphs.
pub fn weighted_size_pmf(g: &SimpleGraph, q: &CompoundingDist) -> Result<Pmf> {
    const LIMIT: usize = 12;
    if g.n > LIMIT {
        return Err(Error::TooLarge { what: "graph for exhaustive weighting", size: g.n, limit: LIMIT });
    }
    let support: Vec<(usize, f64)> = q.iter().filter(|&(_, w)| w > 0.0).collect();
    let mut dense = vec![0.0; g.n * q.last() + 1];
    let mut sets = 0usize;
    for set in 0..(1u32 << g.n) {
        if !g.is_independent(set) {
            continue;
        }
        sets += 1;
        let k = set.count_ones() as usize;
        let mut digits = vec![0usize; k];
        loop {
            let (total, prob) = digits.iter().fold((0, 1.0), |(t, p), &d| (t + support[d].0, p * support[d].1));
            dense[total] += prob;
            let Some(i) = digits.iter().position(|&d| d + 1 < support.len()) else { break };
            digits[i] += 1;
            digits[..i].iter_mut().for_each(|d| *d = 0);
        }
    }
    dense.iter_mut().for_each(|w| *w /= sets as f64);
    Pmf::normalize(&dense, 0)
}

/// Entropy bound for the weighted size of a uniform random independent set
/// of a claw-free graph. Checks ultra-log-concavity of `I_k` exactly and
/// `H(C_Q P) <= H(CPo(lambda, Q))` with `lambda` the mean set size. For
/// `Q = delta_1` also checks `H(Po(lambda)) <= (1/2) log(2 pi e (lambda + 1/12))`
/// and records `log(alpha(G) + 1)`, the entropy of the uniform law on the
/// possible sizes.
pub fn graph_entropy_bound(g: &SimpleGraph, q: &CompoundingDist, settings: &Settings) -> Result<VerificationReport> {
    let counts = enumerate_independent_sets(g);
    let p = independent_set_pmf(&counts)?;
    let mut report = VerificationReport::new("graph-entropy");
    report.hypothesis(Hypothesis::ClawFree, g.is_claw_free(), None);
    let ulc = counts_are_ulc(&counts);
    let entropy_ok = size_entropy_report(&mut report, &p, q, settings)?;
    let alpha = counts.len() - 1;
    report
        .margin("independence_number", alpha as f64)
        .margin("ulc_counts", f64::from(u8::from(ulc.is_ok())))
        .margin("trivial_bound", ((alpha + 1) as f64).ln());
    let mut ok = ulc.is_ok() && entropy_ok;
    if q.offset() == 1 && q.last() == 1 {
        let upper = poisson_entropy_upper(p.mean())?;
        report.margin("poisson_entropy_upper", upper).margin("size_entropy", entropy_nats(&p));
        ok &= report.margins["reference_entropy"] <= upper + ENTROPY_SLACK;
    }
    Ok(report.finish(ok))
}
