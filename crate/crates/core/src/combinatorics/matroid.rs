use std::collections::BTreeSet;
use std::fmt;

use serde::Deserialize;

use super::{counts_are_ulc, counts_pmf, size_entropy_report, SimpleGraph};
use crate::compound::CompoundingDist;
use crate::error::{Error, Result};
use crate::verify::{Hypothesis, Settings, VerificationReport};

/// Largest ground set on which the matroid axioms are checked exhaustively.
/// Larger oracles are trusted.
pub const MAX_AXIOM_GROUND: usize = 16;

/// Largest ground set accepted at all; subsets are `u32` bitmasks.
const MAX_GROUND: usize = 30;

/// A violated matroid axiom, with sets written as bitmasks over the ground
/// set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Axiom {
    /// The empty set is not independent.
    EmptySet,
    /// `set` is independent but `set - {element}` is not.
    Hereditary { set: u32, element: usize },
    /// `larger` is independent and bigger than the independent `smaller`,
    /// yet no element of `larger` extends `smaller`.
    Exchange { smaller: u32, larger: u32 },
}

fn members(set: u32) -> Vec<usize> {
    (0..32).filter(|&i| set >> i & 1 == 1).collect()
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::EmptySet => write!(f, "empty-set"),
            Axiom::Hereditary { set, element } => {
                write!(f, "hereditary ({:?} is independent, removing {element} is not)", members(*set))
            }
            Axiom::Exchange { smaller, larger } => {
                write!(f, "exchange (no element of {:?} extends {:?})", members(*larger), members(*smaller))
            }
        }
    }
}

/// Membership test for the independent sets of a set system on
/// `0..ground_size`.
pub trait IndependenceOracle {
    fn ground_size(&self) -> usize;
    fn is_independent(&self, set: u32) -> bool;
}

/// Explicitly listed independent sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSystem {
    ground_size: usize,
    sets: BTreeSet<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSystem {
    Sets(Vec<Vec<usize>>),
    Explicit { ground_size: usize, independent: Vec<Vec<usize>> },
}

impl SetSystem {
    pub fn new(ground_size: usize, sets: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        if ground_size > MAX_GROUND {
            return Err(Error::TooLarge { what: "ground set", size: ground_size, limit: MAX_GROUND });
        }
        let mut out = BTreeSet::new();
        for s in sets {
            let mut mask = 0u32;
            for e in s {
                if e >= ground_size {
                    return Err(Error::Parse(format!("element {e} outside ground set 0..{ground_size}")));
                }
                mask |= 1 << e;
            }
            out.insert(mask);
        }
        Ok(SetSystem { ground_size, sets: out })
    }

    /// Parse either a JSON list of sets, `[[], [0], [1], [0, 1]]`, whose ground
    /// set is `0..=max element`, or `{"ground_size": n, "independent": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))? {
            RawSystem::Sets(sets) => {
                let n = sets.iter().flatten().map(|&e| e + 1).max().unwrap_or(0);
                Self::new(n, sets)
            }
            RawSystem::Explicit { ground_size, independent } => Self::new(ground_size, independent),
        }
    }

    /// Materialize any oracle by testing every subset.
    pub fn from_oracle(oracle: &dyn IndependenceOracle) -> Result<Self> {
        let n = oracle.ground_size();
        if n > MAX_AXIOM_GROUND {
            return Err(Error::TooLarge { what: "ground set", size: n, limit: MAX_AXIOM_GROUND });
        }
        let sets = (0..1u32 << n).filter(|&s| oracle.is_independent(s)).collect();
        Ok(SetSystem { ground_size: n, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

impl IndependenceOracle for SetSystem {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn is_independent(&self, set: u32) -> bool {
        self.sets.contains(&set)
    }
}

/// `U_{rank, n}`: every set of at most `rank` elements is independent. The
/// free matroid is `U_{n, n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformMatroid {
    pub rank: usize,
    pub n: usize,
}

impl UniformMatroid {
    pub fn free(n: usize) -> Self {
        UniformMatroid { rank: n, n }
    }
}

impl IndependenceOracle for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: u32) -> bool {
        (set >> self.n) == 0 && set.count_ones() as usize <= self.rank
    }
}

/// Cycle matroid of a graph: the ground set is the edge list and the
/// independent sets are the forests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphicMatroid {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphicMatroid {
    pub fn new(g: &SimpleGraph) -> Result<Self> {
        let edges = g.edges();
        if edges.len() > MAX_GROUND {
            return Err(Error::TooLarge { what: "edge set", size: edges.len(), limit: MAX_GROUND });
        }
        Ok(GraphicMatroid { vertices: g.vertex_count(), edges })
    }
}

impl IndependenceOracle for GraphicMatroid {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }

    fn is_independent(&self, set: u32) -> bool {
        if set >> self.edges.len() != 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        members(set).into_iter().all(|i| {
            let (a, b) = self.edges[i];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
            ra != rb
        })
    }
}

/// Exhaustive check of the matroid axioms for ground sets up to
/// [`MAX_AXIOM_GROUND`].
///
/// Exchange is tested through ranks: writing `r(X)` for the largest
/// independent subset of `X` and `ext(I)` for the elements that extend `I`,
/// a hereditary system is a matroid exactly when `r(ground - ext(I)) = |I|`
/// for every independent `I`.
pub fn check_matroid_axioms(m: &dyn IndependenceOracle) -> Result<()> {
    let n = m.ground_size();
    if n > MAX_AXIOM_GROUND {
        return Err(Error::TooLarge { what: "ground set", size: n, limit: MAX_AXIOM_GROUND });
    }
    let full = (1u32 << n) - 1;
    let indep: Vec<bool> = (0..=full).map(|s| m.is_independent(s)).collect();
    if !indep[0] {
        return Err(Error::NotAMatroid(Axiom::EmptySet));
    }
    for set in (0..=full).filter(|&s| indep[s as usize]) {
        if let Some(element) = members(set).into_iter().find(|&e| !indep[(set & !(1 << e)) as usize]) {
            return Err(Error::NotAMatroid(Axiom::Hereditary { set, element }));
        }
    }
    // best[X] is a largest independent subset of X
    let mut best = vec![0u32; full as usize + 1];
    for x in 1..=full {
        best[x as usize] = if indep[x as usize] {
            x
        } else {
            members(x).into_iter().map(|e| best[(x & !(1 << e)) as usize]).max_by_key(|s| s.count_ones()).unwrap_or(0)
        };
    }
    for set in (0..=full).filter(|&s| indep[s as usize]) {
        let ext = (0..n).filter(|&e| set >> e & 1 == 0 && indep[(set | 1 << e) as usize]).fold(0u32, |a, e| a | 1 << e);
        let larger = best[(full & !ext) as usize];
        if larger.count_ones() > set.count_ones() {
            return Err(Error::NotAMatroid(Axiom::Exchange { smaller: set, larger }));
        }
    }
    Ok(())
}

/// `I_k` by depth-first search over independent sets, extending each set
/// only by elements above its largest member. Assumes the system is closed
/// downward.
pub fn count_independent_sets(m: &dyn IndependenceOracle) -> Vec<u64> {
    fn dfs(m: &dyn IndependenceOracle, set: u32, start: usize, size: usize, counts: &mut Vec<u64>) {
        if counts.len() <= size {
            counts.resize(size + 1, 0);
        }
        counts[size] += 1;
        for e in start..m.ground_size() {
            let next = set | 1 << e;
            if m.is_independent(next) {
                dfs(m, next, e + 1, size + 1, counts);
            }
        }
    }
    let mut counts = Vec::new();
    if m.is_independent(0) {
        dfs(m, 0, 0, 0, &mut counts);
    }
    counts
}

/// `I_k` for a matroid together with a report on it. The axioms are verified
/// when the ground set is at most [`MAX_AXIOM_GROUND`]. Ultra-log-concavity
/// of `I_k` is checked exactly and enters as a hypothesis of the entropy
/// bound `H(C_Q P) <= H(CPo(lambda, Q))`; when it fails, the margin
/// `mason_counterexample` is set to 1.
pub fn matroid_sequence(
    m: &dyn IndependenceOracle,
    q: &CompoundingDist,
    settings: &Settings,
) -> Result<(Vec<u64>, VerificationReport)> {
    let axioms_checked = m.ground_size() <= MAX_AXIOM_GROUND;
    if axioms_checked {
        check_matroid_axioms(m)?;
    }
    let counts = count_independent_sets(m);
    let p = counts_pmf(&counts)?;
    let mut report = VerificationReport::new("matroid-entropy");
    let ulc = counts_are_ulc(&counts);
    let margin = ulc.err().map(|k| {
        let (prev, cur, next) = (counts[k - 1] as f64, counts[k] as f64, counts[k + 1] as f64);
        k as f64 * cur * cur - (k + 1) as f64 * next * prev
    });
    report.hypothesis(Hypothesis::UltraLogConcaveCounts, ulc.is_ok(), margin.or(Some(0.0)));
    let entropy_ok = size_entropy_report(&mut report, &p, q, settings)?;
    report
        .margin("rank", (counts.len() - 1) as f64)
        .margin("axioms_checked", f64::from(u8::from(axioms_checked)))
        .margin("mason_counterexample", f64::from(u8::from(ulc.is_err())));
    Ok((counts, report.finish(entropy_ok)))
}
