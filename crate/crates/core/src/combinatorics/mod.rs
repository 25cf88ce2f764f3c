//! Counting sequences from combinatorics: sizes of independent sets in
//! graphs and in matroids, and entropy bounds for their size distributions.

mod graph;
mod matroid;

pub use graph::{
    enumerate_independent_sets, graph_entropy_bound, independent_set_pmf, weighted_size_pmf, SimpleGraph, MAX_VERTICES,
};
pub use matroid::{
    check_matroid_axioms, count_independent_sets, matroid_sequence, Axiom, GraphicMatroid, IndependenceOracle,
    SetSystem, UniformMatroid, MAX_AXIOM_GROUND,
};

use crate::compound::{compound, compound_poisson, CompoundingDist};
use crate::info::entropy_nats;
use crate::pmf::Pmf;
use crate::verify::{Hypothesis, Settings, VerificationReport, ENTROPY_SLACK};
use crate::Result;

/// Whether `k I_k^2 >= (k+1) I_{k+1} I_{k-1}` for every interior `k`, in exact
/// integer arithmetic. Returns the first failing `k` otherwise.
pub fn counts_are_ulc(counts: &[u64]) -> std::result::Result<(), usize> {
    for k in 1..counts.len().saturating_sub(1) {
        let (prev, cur, next) = (counts[k - 1] as u128, counts[k] as u128, counts[k + 1] as u128);
        if (k as u128) * cur * cur < (k as u128 + 1) * next * prev {
            return Err(k);
        }
    }
    Ok(())
}

/// Normalized counts as a pmf.
pub fn counts_pmf(counts: &[u64]) -> Result<Pmf> {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Pmf::normalize(&w, 0)
}

/// Shared tail of the graph and matroid reports: the rate hypothesis for
/// `lambda` the mean size, and `H(C_Q P) <= H(CPo(lambda, Q))`.
pub(crate) fn size_entropy_report(
    report: &mut VerificationReport,
    p: &Pmf,
    q: &CompoundingDist,
    settings: &Settings,
) -> Result<bool> {
    let lambda = p.mean();
    let (q1, q2) = (q.q(1), q.q(2));
    report.shape(Hypothesis::LogConcaveQ, &q.is_log_concave(settings.tol));
    if q1 > 0.0 {
        let rate = lambda * q1 * q1 - 2.0 * q2;
        report.hypothesis(Hypothesis::RateCondition, rate >= -settings.tol * (2.0 * q2).max(1.0), Some(rate));
    } else {
        report.hypothesis(Hypothesis::RateCondition, false, None);
    }
    let c = compound(q, p);
    let h = entropy_nats(&c);
    let reference = compound_poisson(lambda, q, settings.tail_eps, c.last().max(50))?;
    let h_ref = entropy_nats(&reference);
    report.margin("lambda", lambda).margin("entropy", h).margin("reference_entropy", h_ref);
    Ok(h <= h_ref + ENTROPY_SLACK)
}
