//! Finite-support probability mass functions on `{0, 1, 2, ...}`.
//!
//! A [`Pmf`] stores its mass densely starting at `offset`. Constructions of
//! infinite-support laws (Poisson, geometric, compound Poisson) cut the tail
//! once the remaining mass drops below a requested `tail_eps`, and that bound
//! travels with the value so downstream operations can account for it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the total mass for floating-point rounding.
const MASS_SLACK: f64 = 1e-9;

/// Mass deficits up to this size are attributed to rounding, not truncation.
const ROUNDING_DEFICIT: f64 = 1e-13;

/// Relative slack used by [`Pmf::is_unimodal`].
const UNIMODAL_SLACK: f64 = 1e-12;

/// Outcome of a shape test.
///
/// `worst_margin` is the tested inequality at `worst_index`, normalized by
/// the test so that `holds` is exactly `worst_margin >= -tol`. A gap in the
/// support is reported with a margin of `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeVerdict {
    pub holds: bool,
    pub worst_index: usize,
    pub worst_margin: f64,
}

impl ShapeVerdict {
    pub(crate) fn from_margins(
        margins: impl IntoIterator<Item = (usize, f64)>,
        tol: f64,
        default_index: usize,
    ) -> Self {
        let (worst_index, worst_margin) =
            margins
                .into_iter()
                .fold((default_index, f64::INFINITY), |best, (i, m)| if m < best.1 { (i, m) } else { best });
        let worst_margin = if worst_margin.is_finite() { worst_margin } else { 0.0 };
        ShapeVerdict { holds: worst_margin >= -tol, worst_index, worst_margin }
    }
}

#[derive(Deserialize)]
struct RawPmf {
    offset: usize,
    weights: Vec<f64>,
    #[serde(default)]
    tail_eps: f64,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        Pmf::from_parts_exact(raw.offset, raw.weights, raw.tail_eps)
    }
}

/// A probability mass function with finite support.
///
/// Invariants: all weights are nonnegative, the first and last weights are
/// positive, and the total mass lies in `[1 - tail_eps, 1]` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct Pmf {
    offset: usize,
    weights: Vec<f64>,
    tail_eps: f64,
}

impl Pmf {
    /// Scale `weights` to unit mass and trim zero weights from both ends.
    pub fn normalize(weights: &[f64], offset: usize) -> Result<Self> {
        check_weights(weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::AllZero);
        }
        let scaled = weights.iter().map(|w| w / sum).collect();
        Self::trim(offset, scaled, 0.0)
    }

    /// Validate already-normalized parts without rescaling.
    ///
    /// The weights are kept bit-for-bit; only zero weights at either end are
    /// trimmed. Used by deserialization.
    pub fn from_parts_exact(offset: usize, weights: Vec<f64>, tail_eps: f64) -> Result<Self> {
        check_weights(&weights)?;
        if !(tail_eps >= 0.0 && tail_eps.is_finite()) {
            return Err(Error::OutOfRange { name: "tail_eps", value: tail_eps });
        }
        let pmf = Self::trim(offset, weights, tail_eps)?;
        let sum = pmf.total_mass();
        if sum > 1.0 + MASS_SLACK || sum < 1.0 - tail_eps - MASS_SLACK {
            return Err(Error::BadMass { sum, tail_eps });
        }
        Ok(pmf)
    }

    /// Internal constructor for weights produced by this crate's own
    /// arithmetic: trims, and widens `tail_eps` to the observed deficit when
    /// that exceeds rounding.
    pub(crate) fn assemble(offset: usize, weights: Vec<f64>, tail_eps: f64) -> Result<Self> {
        let mut pmf = Self::trim(offset, weights, tail_eps)?;
        let deficit = 1.0 - pmf.total_mass();
        if deficit > ROUNDING_DEFICIT {
            pmf.tail_eps = pmf.tail_eps.max(deficit);
        }
        Ok(pmf)
    }

    /// Dense weights starting at 0.
    pub(crate) fn from_dense(weights: Vec<f64>, tail_eps: f64) -> Result<Self> {
        Self::assemble(0, weights, tail_eps)
    }

    fn trim(offset: usize, mut weights: Vec<f64>, tail_eps: f64) -> Result<Self> {
        let first = weights.iter().position(|&w| w > 0.0).ok_or(Error::AllZero)?;
        let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(first);
        weights.truncate(last + 1);
        weights.drain(..first);
        Ok(Pmf { offset: offset + first, weights, tail_eps })
    }

    /// Unit mass at `k`.
    pub fn point(k: usize) -> Self {
        Pmf { offset: k, weights: vec![1.0], tail_eps: 0.0 }
    }

    /// Uniform on `{a, ..., b}`.
    pub fn uniform(a: usize, b: usize) -> Result<Self> {
        if b < a {
            return Err(Error::OutOfRange { name: "uniform upper end", value: b as f64 });
        }
        Self::normalize(&vec![1.0; b - a + 1], a)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Self::from_dense(vec![1.0 - p, p], 0.0)
    }

    /// Bin(n, p), built by repeated convolution with Bern(p).
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Self::from_dense(binomial_row(n, p), 0.0)
    }

    /// Po(lambda) truncated once the remaining tail mass is below `tail_eps`.
    pub fn poisson(lambda: f64, tail_eps: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::NegativeRate(lambda));
        }
        if lambda == 0.0 {
            return Ok(Self::point(0));
        }
        let tail_eps = positive_eps(tail_eps)?;
        // log-space recursion keeps large rates away from underflow at x = 0
        let ln_lambda = lambda.ln();
        let mut ln_term = -lambda;
        let mut weights = vec![ln_term.exp()];
        let mut k = 0usize;
        loop {
            k += 1;
            ln_term += ln_lambda - (k as f64).ln();
            let term = ln_term.exp();
            weights.push(term);
            // for k + 1 > lambda the tail past k is dominated by a geometric series
            let ratio = lambda / (k + 1) as f64;
            if ratio < 1.0 {
                let tail_bound = term * ratio / (1.0 - ratio);
                if tail_bound < tail_eps {
                    let tail = tail_bound.max(1.0 - weights.iter().sum::<f64>()).max(0.0);
                    return Self::assemble(0, weights, tail);
                }
            }
        }
    }

    /// Geometric law `P(start + k) = a (1 - a)^k`, truncated at `tail_eps`.
    pub fn geometric(a: f64, start: usize, tail_eps: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::OutOfRange { name: "geometric parameter", value: a });
        }
        let tail_eps = positive_eps(tail_eps)?;
        let mut weights = Vec::new();
        let mut term = a;
        let mut tail = 1.0;
        while tail >= tail_eps && term > 0.0 {
            weights.push(term);
            tail *= 1.0 - a;
            term *= 1.0 - a;
        }
        Self::assemble(start, weights, tail.max(0.0))
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    /// Largest support point.
    pub fn last(&self) -> usize {
        self.offset + self.weights.len() - 1
    }

    /// Mass at `x`; zero outside the stored range.
    pub fn get(&self, x: usize) -> f64 {
        x.checked_sub(self.offset).and_then(|i| self.weights.get(i)).copied().unwrap_or(0.0)
    }

    /// `(x, P(x))` over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.offset + i, w))
    }

    /// Weights indexed from 0, of length `last() + 1`.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.offset];
        dense.extend_from_slice(&self.weights);
        dense
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.iter().map(|(x, w)| (x as f64).powi(k as i32) * w).sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `E[X (X - 1) ... (X - n + 1)]`.
    pub fn falling_factorial_moment(&self, n: u32) -> f64 {
        self.iter()
            .map(|(x, w)| {
                let falling: f64 = (0..n as usize).map(|i| x as f64 - i as f64).product();
                falling * w
            })
            .sum()
    }

    /// Largest absolute pointwise difference over the union of supports.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.last().max(other.last());
        (lo..=hi).map(|x| (self.get(x) - other.get(x)).abs()).fold(0.0, f64::max)
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let weights = convolve_slices(&self.weights, &other.weights);
        Self::assemble(self.offset + other.offset, weights, self.tail_eps + other.tail_eps)
            .expect("convolution of positive-mass pmfs has positive mass")
    }

    /// `j`-fold self-convolution by repeated squaring; `j = 0` is the unit
    /// mass at 0.
    pub fn power(&self, j: usize) -> Pmf {
        let mut result = Pmf::point(0);
        let mut base = self.clone();
        let mut j = j;
        while j > 0 {
            if j & 1 == 1 {
                result = result.convolve(&base);
            }
            j >>= 1;
            if j > 0 {
                base = base.convolve(&base);
            }
        }
        result
    }

    /// Size-biased law `P#(y) = (y + 1) P(y + 1) / mean`.
    pub fn size_bias(&self) -> Result<Pmf> {
        let mean = self.mean();
        if mean <= f64::EPSILON {
            return Err(Error::ZeroMean);
        }
        let mut dense = vec![0.0; self.last()];
        for (x, w) in self.iter().filter(|&(x, _)| x >= 1) {
            dense[x - 1] = x as f64 * w / mean;
        }
        Self::from_dense(dense, self.tail_eps)
    }

    /// `P(x)^2 >= P(x-1) P(x+1)` on an interval support. The margin at `x` is
    /// `1 - P(x-1) P(x+1) / P(x)^2`, so it measures the violation relative to
    /// the local size of the pmf and is meaningful deep in the tails.
    pub fn is_log_concave(&self, tol: f64) -> ShapeVerdict {
        let w = &self.weights;
        let margins =
            (1..w.len().saturating_sub(1)).map(|i| (self.offset + i, local_margin(w[i - 1], w[i], w[i + 1], 1.0)));
        ShapeVerdict::from_margins(margins, tol, self.offset)
    }

    /// `x P(x)^2 >= (x+1) P(x+1) P(x-1)` for all `x >= 1` on an interval
    /// support, with margin `1 - (x+1) P(x+1) P(x-1) / (x P(x)^2)`.
    pub fn is_ultra_log_concave(&self, tol: f64) -> ShapeVerdict {
        let margins = (self.offset.max(1)..=self.last()).map(|x| {
            let factor = (x + 1) as f64 / x as f64;
            (x, local_margin(self.get(x - 1), self.get(x), self.get(x + 1), factor))
        });
        ShapeVerdict::from_margins(margins, tol, self.offset)
    }

    /// Weakly increasing then weakly decreasing. The margin at `x` is
    /// `P(x) - min(max_{y <= x} P(y), max_{y >= x} P(y))` over the maximum
    /// weight.
    pub fn is_unimodal(&self) -> ShapeVerdict {
        let w = &self.weights;
        let scale = self.max_weight();
        let mut right_max = vec![0.0; w.len()];
        let mut running = 0.0f64;
        for i in (0..w.len()).rev() {
            running = running.max(w[i]);
            right_max[i] = running;
        }
        let mut left_max = 0.0f64;
        let margins = w.iter().enumerate().map(|(i, &wi)| {
            left_max = left_max.max(wi);
            (self.offset + i, (wi - left_max.min(right_max[i])) / scale)
        });
        ShapeVerdict::from_margins(margins.collect::<Vec<_>>(), UNIMODAL_SLACK, self.offset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pmf serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        Some(index) => Err(Error::NegativeWeight { index, value: weights[index] }),
        None => Ok(()),
    }
}

/// `1 - factor * prev * next / cur^2`, or `-1` at a gap (`cur = 0`).
fn local_margin(prev: f64, cur: f64, next: f64, factor: f64) -> f64 {
    if cur == 0.0 {
        -1.0
    } else {
        1.0 - factor * (prev / cur) * (next / cur)
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value: p })
    }
}

fn positive_eps(tail_eps: f64) -> Result<f64> {
    if tail_eps > 0.0 && tail_eps < 1.0 {
        Ok(tail_eps)
    } else {
        Err(Error::OutOfRange { name: "tail_eps", value: tail_eps })
    }
}

pub(crate) fn convolve_slices(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Binomial(n, p) weights on `0..=n` via Pascal-style updates.
pub(crate) fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    row.push(1.0);
    for _ in 0..n {
        advance_binomial_row(&mut row, p);
    }
    row
}

/// Turn Bin(m, p) weights into Bin(m + 1, p) in place.
pub(crate) fn advance_binomial_row(row: &mut Vec<f64>, p: f64) {
    row.push(0.0);
    for k in (0..row.len()).rev() {
        let stay = row[k] * (1.0 - p);
        let moved = if k > 0 { row[k - 1] * p } else { 0.0 };
        row[k] = stay + moved;
    }
}
