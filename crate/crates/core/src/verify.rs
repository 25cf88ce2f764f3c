//! Numerical checks of maximum-entropy and log-concavity statements about
//! compound laws, each summarized in a [`VerificationReport`].
//!
//! A report lists the hypotheses it tested and whether the conclusion held.
//! When a hypothesis fails the report is [`Status::Vacuous`]: the conclusion
//! is still evaluated and recorded, but a failure there is not a
//! counterexample to anything.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::{self, compound, compound_binomial, CompoundingDist, ParamVector};
use crate::error::{Error, Result};
use crate::info::{self, entropy_nats, relative_entropy_nats, Base};
use crate::pmf::{Pmf, ShapeVerdict};
use crate::semigroup::check_score_decreasing;
use crate::{DEFAULT_TAIL_EPS, DEFAULT_TOL, DENSITY_FLOOR};

/// Slack on entropy inequalities, in nats.
pub const ENTROPY_SLACK: f64 = 1e-9;

/// Minimum Panjer index for log-concavity scans of compound Poisson laws.
pub const LC_SCAN_MIN_INDEX: usize = 50;

/// Relative residual allowed in the Hansen identity.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    UltraLogConcaveP,
    LogConcaveP,
    LogConcaveQ,
    LogConcaveSizeBiasedQ,
    LogConcaveReference,
    /// `p_i >= 1 / (1 + Q(1)^2 / Q(2))` for every `i`.
    BernoulliThreshold,
    /// `lambda Q(1)^2 >= 2 Q(2)`.
    RateCondition,
    /// `(x + 1) P(x + 1) / P(x) >= 2 Q(2) / Q(1)^2`.
    RatioCondition,
    /// `(P(1)^2 - P(0) P(2)) / (P(0) P(1)) >= Q(2) / Q(1)^2`.
    GeometricCondition,
    /// Finite support of `Q`, which is enough for the binomial statement.
    TailCondition,
    ClawFree,
    UltraLogConcaveCounts,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::UltraLogConcaveP => "ulc-p",
            Hypothesis::LogConcaveP => "lc-p",
            Hypothesis::LogConcaveQ => "lc-q",
            Hypothesis::LogConcaveSizeBiasedQ => "lc-size-biased-q",
            Hypothesis::LogConcaveReference => "lc-reference",
            Hypothesis::BernoulliThreshold => "bernoulli-threshold",
            Hypothesis::RateCondition => "rate-condition",
            Hypothesis::RatioCondition => "ratio-condition",
            Hypothesis::GeometricCondition => "geometric-condition",
            Hypothesis::TailCondition => "tail-condition",
            Hypothesis::ClawFree => "claw-free",
            Hypothesis::UltraLogConcaveCounts => "ulc-counts",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Numerical knobs shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: f64,
    pub tail_eps: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { tol: DEFAULT_TOL, tail_eps: DEFAULT_TAIL_EPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    /// Slack of the hypothesis, negative when it fails. `None` when the
    /// quantity is undefined on the input.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim_id: String,
    pub status: Status,
    pub hypotheses: Vec<HypothesisCheck>,
    pub conclusion_holds: bool,
    pub margins: BTreeMap<String, f64>,
    pub instances_run: usize,
}

impl VerificationReport {
    pub(crate) fn new(claim_id: &str) -> Self {
        VerificationReport {
            claim_id: claim_id.to_string(),
            status: Status::Pass,
            hypotheses: Vec::new(),
            conclusion_holds: true,
            margins: BTreeMap::new(),
            instances_run: 1,
        }
    }

    pub(crate) fn hypothesis(&mut self, h: Hypothesis, holds: bool, margin: Option<f64>) -> &mut Self {
        self.hypotheses.push(HypothesisCheck { name: h.name().to_string(), holds, margin });
        self
    }

    pub(crate) fn shape(&mut self, h: Hypothesis, v: &ShapeVerdict) -> &mut Self {
        self.hypothesis(h, v.holds, Some(v.worst_margin))
    }

    pub(crate) fn margin(&mut self, key: &str, value: f64) -> &mut Self {
        self.margins.insert(key.to_string(), value);
        self
    }

    pub(crate) fn finish(mut self, conclusion_holds: bool) -> Self {
        self.conclusion_holds = conclusion_holds;
        self.status = if !self.all_hypotheses_hold() {
            Status::Vacuous
        } else if conclusion_holds {
            Status::Pass
        } else {
            Status::Fail
        };
        self
    }

    pub fn all_hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }

    /// True unless the hypotheses held and the conclusion did not.
    pub fn ok(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Seed for trial `i` of a sweep seeded with `seed`.
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Support bound used for random ultra-log-concave draws of mean `lambda`.
pub fn ulc_support_for(lambda: f64) -> usize {
    (lambda + 10.0 * lambda.sqrt() + 12.0).ceil() as usize
}

/// `CPo(lambda, Q)` long enough for a log-concavity scan.
pub fn cpo_for_scan(lambda: f64, q: &CompoundingDist, settings: &Settings) -> Result<Pmf> {
    compound::compound_poisson(lambda, q, settings.tail_eps, LC_SCAN_MIN_INDEX)
}

/// Outcome of one draw in [`verify_maxent_poisson`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTrial {
    pub seed: u64,
    pub p: Pmf,
    /// `H(C_Q P)` in nats.
    pub entropy: f64,
    /// `H(CPo(lambda, Q))` in nats, on the reference used for this draw.
    pub reference_entropy: f64,
    /// `D(C_Q P || CPo(lambda, Q))` in nats.
    pub divergence: f64,
    pub score: ShapeVerdict,
}

impl PoissonTrial {
    pub fn entropy_ok(&self) -> bool {
        self.entropy <= self.reference_entropy + ENTROPY_SLACK
    }

    pub fn gap_ok(&self) -> bool {
        self.divergence <= self.reference_entropy - self.entropy + ENTROPY_SLACK
    }
}

/// Draw `trials` random ultra-log-concave `P` of mean `lambda` and evaluate
/// entropies, the divergence gap, and the score monotonicity for each.
/// Results are ordered by trial index whatever the thread count.
pub fn maxent_poisson_trials(
    q: &CompoundingDist,
    lambda: f64,
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Vec<PoissonTrial>> {
    let support = ulc_support_for(lambda);
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            let p = info::sample_ulc(support, lambda, s)?;
            let c = compound(q, &p);
            let reference = compound::compound_poisson(lambda, q, settings.tail_eps, c.last())?;
            let entropy = entropy_nats(&c);
            let reference_entropy = entropy_nats(&reference);
            let divergence = relative_entropy_nats(&c, &reference)?;
            let score = match check_score_decreasing(&p, q, settings.tol) {
                Ok(v) => v,
                Err(Error::HypothesisFailed(_)) => {
                    ShapeVerdict { holds: false, worst_index: 0, worst_margin: f64::NAN }
                }
                Err(e) => return Err(e),
            };
            Ok(PoissonTrial { seed: s, p, entropy, reference_entropy, divergence, score })
        })
        .collect()
}

/// Compound Poisson maximum entropy: for log-concave `Q` and `CPo(lambda, Q)`,
/// `H(C_Q P) <= H(CPo(lambda, Q))` over ultra-log-concave `P` of mean
/// `lambda`, together with the sharper
/// `D(C_Q P || CPo) <= H(CPo) - H(C_Q P)` and monotonicity of the score.
pub fn verify_maxent_poisson(
    q: &CompoundingDist,
    lambda: f64,
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::OutOfRange { name: "trials", value: 0.0 });
    }
    let mut report = VerificationReport::new("maxent-poisson");
    report.shape(Hypothesis::LogConcaveQ, &q.is_log_concave(settings.tol));
    let cpo = cpo_for_scan(lambda, q, settings)?;
    report.shape(Hypothesis::LogConcaveReference, &cpo.is_log_concave(settings.tol));

    let outcomes = maxent_poisson_trials(q, lambda, trials, seed, settings)?;
    let entropy_failures = outcomes.iter().filter(|t| !t.entropy_ok()).count();
    let gap_failures = outcomes.iter().filter(|t| !t.gap_ok()).count();
    let score_failures = outcomes.iter().filter(|t| !t.score.holds).count();
    let min_gap = outcomes.iter().map(|t| t.reference_entropy - t.entropy).fold(f64::INFINITY, f64::min);
    let min_gap_slack =
        outcomes.iter().map(|t| t.reference_entropy - t.entropy - t.divergence).fold(f64::INFINITY, f64::min);
    report
        .margin("reference_entropy", entropy_nats(&cpo))
        .margin("min_entropy_gap", min_gap)
        .margin("min_divergence_slack", min_gap_slack)
        .margin("entropy_failures", entropy_failures as f64)
        .margin("gap_failures", gap_failures as f64)
        .margin("score_failures", score_failures as f64);
    report.instances_run = trials;
    Ok(report.finish(entropy_failures + gap_failures + score_failures == 0))
}

/// A uniform point of `{p in [0,1]^n : sum p = lambda}`, by rejection from the
/// scaled simplex. `None` after `max_attempts` rejections.
pub fn sample_params(n: usize, lambda: f64, rng: &mut impl Rng, max_attempts: usize) -> Option<ParamVector> {
    for _ in 0..max_attempts {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|x| lambda * x / total).collect();
        if p.iter().all(|&x| x <= 1.0) {
            return ParamVector::new(p).ok();
        }
    }
    None
}

/// Draws before [`verify_maxent_binomial`] gives up on one grid point.
const PARAM_ATTEMPTS: usize = 10_000;

/// Compound binomial maximum entropy: for log-concave `Q` and
/// `CBin(n, lambda/n, Q)`, `H(C_Q b_p) <= H(CBin(n, lambda/n, Q))` over
/// Bernoulli parameters with `sum p_i = lambda`. Every `Q` here has finite
/// support, which settles the tail requirement.
///
/// The margins record the number of sampled parameter vectors that beat the
/// reference, and the first coordinates of the worst one.
pub fn verify_maxent_binomial(
    q: &CompoundingDist,
    n: usize,
    lambda: f64,
    grid: usize,
    seed: u64,
    settings: &Settings,
) -> Result<VerificationReport> {
    if !(lambda > 0.0 && lambda <= n as f64) {
        return Err(Error::OutOfRange { name: "lambda", value: lambda });
    }
    let mut report = VerificationReport::new("maxent-binomial");
    report.shape(Hypothesis::LogConcaveQ, &q.is_log_concave(settings.tol));
    let reference = compound_binomial(n, lambda / n as f64, q)?;
    report.shape(Hypothesis::LogConcaveReference, &reference.is_log_concave(settings.tol));
    report.hypothesis(Hypothesis::TailCondition, true, None);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<ParamVector> =
        (0..grid).filter_map(|_| sample_params(n, lambda, &mut rng, PARAM_ATTEMPTS)).collect();
    let powers = q.powers(n);
    let h_ref = entropy_nats(&reference);
    let excess: Vec<f64> = params
        .par_iter()
        .map(|p| entropy_nats(&compound::compound_with_powers(&powers, q, &compound::bernoulli_sum(p))) - h_ref)
        .collect();
    let violations = excess.iter().filter(|&&e| e > ENTROPY_SLACK).count();
    report.margin("reference_entropy", h_ref).margin("violations", violations as f64);
    if let Some((i, &worst)) = excess.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        report.margin("max_excess", worst);
        for (j, &pj) in params[i].as_slice().iter().enumerate().take(2) {
            report.margin(&format!("worst_p{}", j + 1), pj);
        }
    }
    report.instances_run = params.len();
    Ok(report.finish(violations == 0))
}

/// The compound binomial counterexample parameters: `Q` uniform on `{1, 2}`,
/// `p = (0.00125, 0.00875)`, `lambda = 0.01`.
pub const CHI_P: [f64; 2] = [0.00125, 0.00875];
pub const CHI_LAMBDA: f64 = 0.01;

/// The three entropies of the counterexample, in the requested base:
/// `(H(CBin(2, 0.005, Q)), H(C_Q b_p), H(CPo(0.01, Q)))`.
pub fn chi_entropies(base: Base, settings: &Settings) -> Result<(f64, f64, f64)> {
    let q = CompoundingDist::uniform(1, 2)?;
    let cbin = compound_binomial(2, CHI_LAMBDA / 2.0, &q)?;
    let cbp = compound(&q, &compound::bernoulli_sum(&ParamVector::new(CHI_P.to_vec())?));
    let cpo = cpo_for_scan(CHI_LAMBDA, &q, settings)?;
    Ok((base.from_nats(entropy_nats(&cbin)), base.from_nats(entropy_nats(&cbp)), base.from_nats(entropy_nats(&cpo))))
}

/// Bounds the counterexample entropies are checked against, in bits.
pub const CHI_CBIN_UPPER: f64 = 0.090798;
pub const CHI_CBP_LOWER: f64 = 0.090804;
pub const CHI_CPO_UPPER: f64 = 0.090765;

/// Reproduce the counterexample to compound binomial maximum entropy without
/// log-concavity: with the parameters in [`CHI_P`],
/// `H(CBin(2, 0.005, Q)) < 0.090798 < 0.090804 < H(C_Q b_p)` and
/// `H(CPo(0.01, Q)) < 0.090765`, all in bits.
pub fn chi_counterexample(settings: &Settings) -> Result<VerificationReport> {
    let (cbin, cbp, cpo) = chi_entropies(Base::Bit, settings)?;
    let mut report = VerificationReport::new("chi-counterexample");
    report
        .margin("h_cbin_bits", cbin)
        .margin("h_cb_p_bits", cbp)
        .margin("h_cpo_bits", cpo)
        .margin("cbin_margin", CHI_CBIN_UPPER - cbin)
        .margin("cb_p_margin", cbp - CHI_CBP_LOWER)
        .margin("cpo_margin", CHI_CPO_UPPER - cpo);
    Ok(report.finish(cbin < CHI_CBIN_UPPER && cbp > CHI_CBP_LOWER && cpo < CHI_CPO_UPPER))
}

/// Compound Bernoulli sums are log-concave when `Q` is log-concave and every
/// `p_i >= 1 / (1 + Q(1)^2 / Q(2))` (threshold 0 when `Q(2) = 0`).
pub fn check_bernoulli_sum_lc(p: &ParamVector, q: &CompoundingDist, settings: &Settings) -> VerificationReport {
    let (q1, q2) = (q.q(1), q.q(2));
    let threshold = if q2 == 0.0 { 0.0 } else { q2 / (q2 + q1 * q1) };
    let min_p = p.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let margin = if p.is_empty() { 0.0 } else { min_p - threshold };
    let mut report = VerificationReport::new("bernoulli-sum-lc");
    report
        .hypothesis(Hypothesis::BernoulliThreshold, margin >= -settings.tol, Some(margin))
        .shape(Hypothesis::LogConcaveQ, &q.is_log_concave(settings.tol));
    let verdict = compound(q, &compound::bernoulli_sum(p)).is_log_concave(settings.tol);
    report.margin("threshold", threshold).margin("lc_margin", verdict.worst_margin);
    report.finish(verdict.holds)
}

fn require_q1(q: &CompoundingDist) -> Result<(f64, f64)> {
    let q1 = q.q(1);
    if q1 <= 0.0 {
        return Err(Error::ZeroQ1);
    }
    Ok((q1, q.q(2)))
}

/// `2 Q(2) / Q(1)^2`.
pub fn critical_rate(q: &CompoundingDist) -> Result<f64> {
    let (q1, q2) = require_q1(q)?;
    Ok(2.0 * q2 / (q1 * q1))
}

/// Log-concavity of `CPo(lambda, Q)` requires `lambda >= 2 Q(2) / Q(1)^2`.
/// The conclusion is the contrapositive: the condition holds or the law is
/// not log-concave.
pub fn check_necessary_condition(lambda: f64, q: &CompoundingDist, settings: &Settings) -> Result<VerificationReport> {
    if !(lambda > 0.0) {
        return Err(Error::NegativeRate(lambda));
    }
    let critical = critical_rate(q)?;
    let condition = lambda - critical;
    let lc = cpo_for_scan(lambda, q, settings)?.is_log_concave(settings.tol);
    let condition_holds = condition >= -settings.tol * critical.max(1.0);
    let mut report = VerificationReport::new("necessary-condition");
    report
        .margin("critical_rate", critical)
        .margin("condition_margin", condition)
        .margin("lc_margin", lc.worst_margin)
        .margin("condition_holds", f64::from(u8::from(condition_holds)))
        .margin("log_concave", f64::from(u8::from(lc.holds)));
    Ok(report.finish(condition_holds || !lc.holds))
}

/// Worst relative residual of the Hansen identity
///
/// `m(m+2) [p_{m+1}^2 - p_m p_{m+2}] = p_{m+1} (r_0 p_m - p_{m+1})
///     + sum_{l=0}^{m} sum_{k=0}^{l} (p_{m-l} p_{m-k-1} - p_{m-k} p_{m-l-1})
///       (r_{k+1} r_l - r_{l+1} r_k)`
///
/// with `r_j = lambda (j+1) Q(j+1)` and `p_{-1} = 0`, for each
/// `m <= p.len() - 3`. Each residual is divided by the sum of the absolute
/// values of the terms at that `m`.
pub fn hansen_identity_residuals(lambda: f64, q: &CompoundingDist, p: &[f64]) -> Vec<f64> {
    let r = |j: usize| lambda * (j + 1) as f64 * q.q(j + 1);
    // p at index i - 1, zero for i = 0
    let pm1 = |i: usize| if i == 0 { 0.0 } else { p[i - 1] };
    let n = p.len();
    (0..n.saturating_sub(2))
        .map(|m| {
            let mf = m as f64;
            let lhs = mf * (mf + 2.0) * (p[m + 1] * p[m + 1] - p[m] * p[m + 2]);
            let first = p[m + 1] * (r(0) * p[m] - p[m + 1]);
            let mut scale = lhs.abs() + first.abs();
            let mut sum = 0.0;
            for l in 0..=m {
                for k in 0..=l {
                    let a = p[m - l] * pm1(m - k) - p[m - k] * pm1(m - l);
                    let b = r(k + 1) * r(l) - r(l + 1) * r(k);
                    let term = a * b;
                    sum += term;
                    scale += term.abs();
                }
            }
            let residual = lhs - first - sum;
            if scale > 0.0 {
                residual.abs() / scale
            } else {
                0.0
            }
        })
        .collect()
}

/// `CPo(lambda, Q)` is log-concave when `Q#` is log-concave and
/// `lambda Q(1)^2 >= 2 Q(2)`; checked on the Panjer pmf up to `n`, along with
/// the Hansen identity residuals used in the proof.
pub fn check_hansen(lambda: f64, q: &CompoundingDist, n: usize, settings: &Settings) -> Result<VerificationReport> {
    let (q1, q2) = require_q1(q)?;
    let rate = lambda * q1 * q1 - 2.0 * q2;
    let mut report = VerificationReport::new("hansen");
    report.shape(Hypothesis::LogConcaveSizeBiasedQ, &q.size_bias()?.is_log_concave(settings.tol)).hypothesis(
        Hypothesis::RateCondition,
        rate >= -settings.tol * (2.0 * q2).max(1.0),
        Some(rate),
    );
    let p = compound::compound_poisson_panjer(lambda, q, n)?;
    let lc = p.is_log_concave(settings.tol);
    let residual =
        hansen_identity_residuals(lambda, q, &p.to_dense()[..=n.min(p.last())]).into_iter().fold(0.0, f64::max);
    report.margin("lc_margin", lc.worst_margin).margin("identity_residual", residual);
    Ok(report.finish(lc.holds && residual <= IDENTITY_TOL))
}

/// For `Q` on `{1, 2}`, `C_Q P` is log-concave when `P` is ultra-log-concave
/// and `(x + 1) P(x + 1) / P(x) >= 2 Q(2) / Q(1)^2` wherever `P(x) > 0` and
/// `x + 1` is inside the computed support.
pub fn check_q2pt(p: &Pmf, q: &CompoundingDist, settings: &Settings) -> Result<VerificationReport> {
    if q.last() > 2 {
        return Err(Error::BadSupport);
    }
    let critical = critical_rate(q)?;
    let min_ratio = (p.offset()..p.last())
        .filter(|&x| p.get(x) > 0.0)
        .map(|x| (x + 1) as f64 * p.get(x + 1) / p.get(x))
        .fold(f64::INFINITY, f64::min);
    let margin = if min_ratio.is_finite() { min_ratio - critical } else { 0.0 };
    let mut report = VerificationReport::new("two-point-compound-lc");
    report.shape(Hypothesis::UltraLogConcaveP, &p.is_ultra_log_concave(settings.tol)).hypothesis(
        Hypothesis::RatioCondition,
        margin >= -settings.tol * critical.max(1.0),
        Some(margin),
    );
    let lc = compound(q, p).is_log_concave(settings.tol);
    report.margin("critical_rate", critical).margin("lc_margin", lc.worst_margin);
    Ok(report.finish(lc.holds))
}

/// For geometric `Q(x) = a (1-a)^(x-1)`, `C_Q P` is log-concave when `P` is
/// log-concave and `(P(1)^2 - P(0) P(2)) / (P(0) P(1)) >= Q(2) / Q(1)^2`.
pub fn check_geometric_compound(p: &Pmf, a: f64, settings: &Settings) -> Result<VerificationReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange { name: "a", value: a });
    }
    let q = CompoundingDist::geometric(a, settings.tail_eps)?;
    let rhs = q.q(2) / (q.q(1) * q.q(1));
    let (p0, p1, p2) = (p.get(0), p.get(1), p.get(2));
    let mut report = VerificationReport::new("geometric-compound-lc");
    report.shape(Hypothesis::LogConcaveP, &p.is_log_concave(settings.tol));
    if p0 * p1 > 0.0 {
        let lhs = (p1 * p1 - p0 * p2) / (p0 * p1);
        let margin = lhs - rhs;
        report.hypothesis(Hypothesis::GeometricCondition, margin >= -settings.tol * rhs.max(1.0), Some(margin));
    } else {
        report.hypothesis(Hypothesis::GeometricCondition, false, None);
    }
    let lc = compound(&q, p).is_log_concave(settings.tol);
    report.margin("lc_margin", lc.worst_margin);
    Ok(report.finish(lc.holds))
}

/// Result of [`check_weak_condition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCondition {
    pub verdict: ShapeVerdict,
    /// Points inside the tested range where some needed value of `R` is at or
    /// below the density floor.
    pub undefined_points: Vec<usize>,
}

/// Whether `x -> log R(x) - sum_v Q(v) log R(x + v)` is non-decreasing,
/// over `x` with `x + max supp Q` inside the support of `R`.
pub fn check_weak_condition(r: &Pmf, q: &CompoundingDist, settings: &Settings) -> WeakCondition {
    let top = r.last().saturating_sub(q.last());
    let mut undefined = Vec::new();
    let mut values: Vec<(usize, f64)> = Vec::new();
    for x in r.offset()..=top {
        let log_r = |y: usize| {
            let v = r.get(y);
            (v > DENSITY_FLOOR).then(|| v.ln())
        };
        let g = log_r(x).and_then(|base| {
            q.iter().filter(|&(_, qv)| qv > 0.0).try_fold(base, |acc, (v, qv)| log_r(x + v).map(|l| acc - qv * l))
        });
        match g {
            Some(g) => values.push((x, g)),
            None => undefined.push(x),
        }
    }
    let margins: Vec<(usize, f64)> = values
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (w[0].0, (w[1].1 - w[0].1) / w[0].1.abs().max(w[1].1.abs()).max(1.0)))
        .collect();
    WeakCondition { verdict: ShapeVerdict::from_margins(margins, settings.tol, 0), undefined_points: undefined }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Settings {
        Settings::default()
    }

    fn uniform12() -> CompoundingDist {
        CompoundingDist::uniform(1, 2).unwrap()
    }

    #[test]
    fn chi_values() {
        let report = chi_counterexample(&s()).unwrap();
        assert_eq!(report.status, Status::Pass, "{report:?}");
        let cbin = report.margins["h_cbin_bits"];
        assert!(cbin > 0.0907 && cbin < 0.090798);
        assert!(report.margins["h_cb_p_bits"] > 0.090804);
        assert!(report.margins["h_cpo_bits"] < 0.090765);
    }

    #[test]
    fn maxent_poisson_point_mass() {
        let r = verify_maxent_poisson(&CompoundingDist::point(1).unwrap(), 1.0, 100, 3, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert_eq!(r.instances_run, 100);
    }

    #[test]
    fn maxent_poisson_boundary_rate() {
        let r = verify_maxent_poisson(&uniform12(), 4.0, 100, 7, &s()).unwrap();
        assert!(r.all_hypotheses_hold(), "{r:?}");
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn maxent_poisson_small_rate_is_vacuous() {
        let r = verify_maxent_poisson(&uniform12(), 0.01, 5, 1, &s()).unwrap();
        assert_eq!(r.status, Status::Vacuous);
        assert!(!r.hypotheses.iter().find(|h| h.name == "lc-reference").unwrap().holds);
    }

    #[test]
    fn maxent_binomial_examples() {
        let r = verify_maxent_binomial(&uniform12(), 2, 1.6, 50, 11, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");

        let r = verify_maxent_binomial(&uniform12(), 2, 0.01, 50, 11, &s()).unwrap();
        assert_eq!(r.status, Status::Vacuous);
        assert!(r.margins["violations"] > 0.0);
        assert!(!r.conclusion_holds);

        let r = verify_maxent_binomial(&CompoundingDist::point(1).unwrap(), 5, 2.0, 50, 2, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn bernoulli_sum_examples() {
        let p = ParamVector::new(vec![0.7, 0.7]).unwrap();
        let r = check_bernoulli_sum_lc(&p, &uniform12(), &s());
        assert!((r.margins["threshold"] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.status, Status::Pass);

        let p = ParamVector::new(vec![0.5, 0.5]).unwrap();
        let r = check_bernoulli_sum_lc(&p, &uniform12(), &s());
        assert_eq!(r.status, Status::Vacuous);
        assert!(r.margins.contains_key("lc_margin"));

        let p = ParamVector::new(vec![0.01, 0.3, 0.9]).unwrap();
        let r = check_bernoulli_sum_lc(&p, &CompoundingDist::point(1).unwrap(), &s());
        assert_eq!(r.margins["threshold"], 0.0);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn necessary_condition_examples() {
        let r = check_necessary_condition(0.01, &uniform12(), &s()).unwrap();
        assert_eq!(r.margins["condition_holds"], 0.0);
        assert_eq!(r.margins["log_concave"], 0.0);
        assert_eq!(r.status, Status::Pass);

        let r = check_necessary_condition(4.0, &uniform12(), &s()).unwrap();
        assert_eq!(r.margins["condition_holds"], 1.0);
        assert_eq!(r.margins["log_concave"], 1.0);

        let r = check_necessary_condition(0.3, &CompoundingDist::point(1).unwrap(), &s()).unwrap();
        assert_eq!(r.margins["critical_rate"], 0.0);
        assert_eq!(r.margins["log_concave"], 1.0);

        let q2 = CompoundingDist::point(2).unwrap();
        assert_eq!(check_necessary_condition(1.0, &q2, &s()), Err(Error::ZeroQ1));
    }

    #[test]
    fn hansen_examples() {
        let geo = CompoundingDist::geometric(0.5, 1e-12).unwrap();
        let r = check_hansen(2.0, &geo, 200, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        let r = check_hansen(4.0, &uniform12(), 200, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert_eq!(check_hansen(1.0, &CompoundingDist::point(2).unwrap(), 10, &s()), Err(Error::ZeroQ1));
    }

    #[test]
    fn hansen_identity_at_zero_is_exact() {
        let q = uniform12();
        let p = compound::compound_poisson_panjer(1.5, &q, 60).unwrap().to_dense();
        let res = hansen_identity_residuals(1.5, &q, &p);
        assert_eq!(res[0], 0.0);
        assert!(res.iter().all(|&r| r <= 1e-12), "{res:?}");
    }

    #[test]
    fn hansen_identity_detects_a_wrong_sequence() {
        let q = uniform12();
        let mut p = compound::compound_poisson_panjer(1.5, &q, 20).unwrap().to_dense();
        p[5] *= 1.01;
        let res = hansen_identity_residuals(1.5, &q, &p);
        assert!(res.iter().any(|&r| r > 1e-6));
    }

    #[test]
    fn two_point_examples() {
        let po = Pmf::poisson(4.0, 1e-12).unwrap();
        let r = check_q2pt(&po, &uniform12(), &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");

        // at x = 3 the ratio is 4 P(4)/P(3) = 9 but at the top it is 0
        let bin = Pmf::binomial(4, 0.9).unwrap();
        let r = check_q2pt(&bin, &uniform12(), &s()).unwrap();
        assert!(r.ok());

        let q13 = CompoundingDist::new(Pmf::normalize(&[0.5, 0.0, 0.5], 1).unwrap()).unwrap();
        assert_eq!(check_q2pt(&po, &q13, &s()), Err(Error::BadSupport));
    }

    #[test]
    fn geometric_examples() {
        let po = Pmf::poisson(2.0, 1e-12).unwrap();
        let r = check_geometric_compound(&po, 0.5, &s()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        let m = r.hypotheses[1].margin.unwrap();
        assert!(m.abs() < 1e-9, "{m}");

        let r = check_geometric_compound(&Pmf::point(0), 0.5, &s()).unwrap();
        assert_eq!(r.status, Status::Vacuous);
        assert_eq!(r.hypotheses[1].margin, None);

        let r = check_geometric_compound(&Pmf::binomial(3, 0.6).unwrap(), 0.7, &s()).unwrap();
        assert!(r.ok());

        assert!(check_geometric_compound(&po, 1.0, &s()).is_err());
    }

    #[test]
    fn weak_condition_examples() {
        let q = uniform12();
        let cpo = compound::compound_poisson(4.0, &q, 1e-12, 50).unwrap();
        assert!(check_weak_condition(&cpo, &q, &s()).verdict.holds);

        let po = Pmf::poisson(3.0, 1e-12).unwrap();
        let w = check_weak_condition(&po, &CompoundingDist::point(1).unwrap(), &s());
        assert!(w.verdict.holds);
        assert!(w.undefined_points.is_empty());

        let gap = Pmf::normalize(&[0.3, 0.0, 0.4, 0.3], 0).unwrap();
        let w = check_weak_condition(&gap, &CompoundingDist::point(1).unwrap(), &s());
        assert_eq!(w.undefined_points, vec![0, 1]);
    }

    #[test]
    fn report_json_round_trip() {
        let r = check_bernoulli_sum_lc(&ParamVector::new(vec![0.7, 0.7]).unwrap(), &uniform12(), &s());
        let text = r.to_json();
        assert!(text.contains("\"claim_id\": \"bernoulli-sum-lc\""));
        assert!(text.contains("\"status\": \"pass\""));
        assert_eq!(VerificationReport::from_json(&text).unwrap(), r);
    }
}
