//! The thinning semigroup `U_alpha`, its compound version `U_alpha^Q`, the
//! compound score function, and the two entropy-style energy paths: `E(alpha)`
//! towards a compound Poisson reference and `E(t)` along a two-coordinate
//! Bernoulli-parameter interpolation towards a compound binomial reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::{self, compound, compound_binomial, CompoundingDist, ParamVector};
use crate::error::{Error, Result};
use crate::pmf::{advance_binomial_row, check_probability, Pmf, ShapeVerdict};
use crate::verify::Hypothesis;
use crate::DENSITY_FLOOR;

/// Slack on monotonicity verdicts, relative to `max |E|`.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Default number of grid points on energy paths.
pub const DEFAULT_GRID: usize = 21;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Binomial thinning: the law of `B_1 + ... + B_X` with `X ~ P` and i.i.d.
/// `B_i ~ Bern(alpha)`.
pub fn thin(p: &Pmf, alpha: f64) -> Result<Pmf> {
    check_probability("alpha", alpha)?;
    let mut dense = vec![0.0; p.last() + 1];
    let mut row = vec![1.0];
    for x in 0..=p.last() {
        let px = p.get(x);
        if px > 0.0 {
            for (k, b) in row.iter().enumerate() {
                dense[k] += px * b;
            }
        }
        advance_binomial_row(&mut row, alpha);
    }
    Pmf::from_dense(dense, p.tail_eps())
}

/// `U_alpha P`: thinning by `alpha` plus an independent `Po(lambda (1 - alpha))`
/// with `lambda` the mean of `P`, so the mean is preserved.
pub fn u_alpha(p: &Pmf, alpha: f64, tail_eps: f64) -> Result<Pmf> {
    check_probability("alpha", alpha)?;
    if alpha == 1.0 {
        return Ok(p.clone());
    }
    let lambda = p.mean();
    let thinned = thin(p, alpha)?;
    let immigrants = Pmf::poisson(lambda * (1.0 - alpha), tail_eps)?;
    Ok(thinned.convolve(&immigrants))
}

/// `U_alpha^Q P = C_Q U_alpha P`.
pub fn u_alpha_q(p: &Pmf, q: &CompoundingDist, alpha: f64, tail_eps: f64) -> Result<Pmf> {
    Ok(compound(q, &u_alpha(p, alpha, tail_eps)?))
}

/// Closed-form `d/d alpha U_alpha P(y)`:
///
/// `(1/alpha) [ lambda (U(y) - U(y-1)) - ((y+1) U(y+1) - y U(y)) ]`,
///
/// indexed by `y` from 0 through one past the last support point of
/// `U_alpha P`.
pub fn u_alpha_derivative(p: &Pmf, alpha: f64, tail_eps: f64) -> Result<Vec<f64>> {
    if alpha == 0.0 {
        return Err(Error::AlphaZero);
    }
    let u = u_alpha(p, alpha, tail_eps)?;
    let lambda = p.mean();
    Ok((0..=u.last() + 1)
        .map(|y| {
            let prev = if y == 0 { 0.0 } else { u.get(y - 1) };
            let cur = u.get(y);
            let yf = y as f64;
            (lambda * (cur - prev) - ((yf + 1.0) * u.get(y + 1) - yf * cur)) / alpha
        })
        .collect())
}

/// Score `r(x) = C_Q(P#)(x) / C_Q P(x) - 1` of a compound law.
///
/// `values[x]` is `None` where the score is not computed: where
/// `C_Q P(x) <= DENSITY_FLOOR`, and, when `P` is a truncation of an
/// infinite-support law (`tail_eps > 0`), at `x >= P.last()` since the
/// numerator there needs `P(x + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub values: Vec<Option<f64>>,
    /// `C_Q P`, the measure the score is centered under.
    pub base: Pmf,
}

impl Score {
    /// `(x, r(x))` at defined points.
    pub fn defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(x, v)| v.map(|r| (x, r)))
    }

    /// `sum_x C_Q P(x) r(x)` over defined points.
    pub fn weighted_mean(&self) -> f64 {
        self.defined().map(|(x, r)| self.base.get(x) * r).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.defined().map(|(_, r)| r.abs()).fold(0.0, f64::max)
    }
}

pub fn score(p: &Pmf, q: &CompoundingDist) -> Result<Score> {
    let biased = p.size_bias()?;
    let powers = q.powers(p.last());
    let base = compound::compound_with_powers(&powers, q, p);
    let numer = compound::compound_with_powers(&powers, q, &biased);
    let horizon = if p.tail_eps() > 0.0 { p.last() } else { usize::MAX };
    let values = (0..=base.last())
        .map(|x| {
            let c = base.get(x);
            (c > DENSITY_FLOOR && x < horizon).then(|| numer.get(x) / c - 1.0)
        })
        .collect();
    Ok(Score { values, base })
}

/// Check that the score is non-increasing, after confirming that `P` is
/// ultra-log-concave and `Q` is log-concave. Margins are `r(x) - r(x+1)` over
/// consecutive defined points.
pub fn check_score_decreasing(p: &Pmf, q: &CompoundingDist, tol: f64) -> Result<ShapeVerdict> {
    if !p.is_ultra_log_concave(tol).holds {
        return Err(Error::HypothesisFailed(Hypothesis::UltraLogConcaveP));
    }
    if !q.is_log_concave(tol).holds {
        return Err(Error::HypothesisFailed(Hypothesis::LogConcaveQ));
    }
    let s = score(p, q)?;
    let margins = s
        .values
        .windows(2)
        .enumerate()
        .filter_map(|(x, w)| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some((x, a - b)),
            _ => None,
        })
        .collect::<Vec<_>>();
    Ok(ShapeVerdict::from_margins(margins, tol, 0))
}

/// `-sum_x W(x) log R(x)` over `x` with `R(x) > DENSITY_FLOOR`; also
/// returns the `W` mass that was skipped.
pub fn cross_energy(w: &Pmf, reference: &Pmf) -> (f64, f64) {
    let mut energy = 0.0;
    let mut skipped = 0.0;
    for (x, wx) in w.iter() {
        let r = reference.get(x);
        if r > DENSITY_FLOOR {
            energy -= wx * r.ln();
        } else {
            skipped += wx;
        }
    }
    (energy, skipped)
}

fn is_non_increasing(energies: &[f64]) -> bool {
    let scale = energies.iter().map(|e| e.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    energies.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * scale)
}

/// `E(alpha) = E[-log C_Q Po(lambda)(W_alpha)]` for `W_alpha ~ U_alpha^Q P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaPath {
    pub alphas: Vec<f64>,
    pub energies: Vec<f64>,
    /// `CPo(lambda, Q)` computed by the Panjer recursion.
    pub reference: Pmf,
    pub monotone_ok: bool,
    /// Largest mass of any `W_alpha` that fell where the reference is below
    /// the density floor.
    pub discarded_mass: f64,
}

/// `E(t) = E[-log C_Q b_pbar(W_t)]` for `W_t ~ C_Q b_{p_t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TPath {
    pub ts: Vec<f64>,
    pub energies: Vec<f64>,
    /// `CBin(n, lambda / n, Q)`.
    pub reference: Pmf,
    pub monotone_ok: bool,
    pub discarded_mass: f64,
}

/// Two-column CSV with header `alpha_or_t,energy`.
pub fn path_csv(points: &[f64], energies: &[f64]) -> String {
    let mut out = String::from("alpha_or_t,energy\n");
    for (a, e) in points.iter().zip(energies) {
        out.push_str(&format!("{a},{e}\n"));
    }
    out
}

impl AlphaPath {
    pub fn to_csv(&self) -> String {
        path_csv(&self.alphas, &self.energies)
    }
}

impl TPath {
    pub fn to_csv(&self) -> String {
        path_csv(&self.ts, &self.energies)
    }
}

fn check_increasing(points: &[f64], lo: f64, hi: f64, name: &'static str) -> Result<()> {
    for &a in points {
        if !(a >= lo && a <= hi) {
            return Err(Error::OutOfRange { name, value: a });
        }
    }
    if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::OutOfRange { name, value: w[1] });
    }
    Ok(())
}

/// Evaluate `E(alpha)` on `alphas` (strictly increasing, within `[0, 1]`).
pub fn energy_poisson_path(p: &Pmf, q: &CompoundingDist, alphas: &[f64], tail_eps: f64) -> Result<AlphaPath> {
    let lambda = p.mean();
    if lambda <= f64::EPSILON {
        return Err(Error::ZeroMean);
    }
    check_increasing(alphas, 0.0, 1.0, "alpha")?;
    let laws = alphas.par_iter().map(|&a| u_alpha_q(p, q, a, tail_eps)).collect::<Result<Vec<_>>>()?;
    let reach = laws.iter().map(Pmf::last).max().unwrap_or(0);
    let reference = compound::compound_poisson(lambda, q, tail_eps, reach)?;
    let (energies, discarded): (Vec<f64>, Vec<f64>) = laws.iter().map(|w| cross_energy(w, &reference)).unzip();
    Ok(AlphaPath {
        alphas: alphas.to_vec(),
        monotone_ok: is_non_increasing(&energies),
        energies,
        reference,
        discarded_mass: discarded.into_iter().fold(0.0, f64::max),
    })
}

/// `p_t = ((p1 + p2)/2 + t, (p1 + p2)/2 - t, p3, ..., pn)`.
pub fn bernoulli_path_params(p: &ParamVector, t: f64) -> Result<ParamVector> {
    let v = p.as_slice();
    if v.len() < 2 {
        return Err(Error::OutOfRange { name: "parameter count", value: v.len() as f64 });
    }
    let mid = (v[0] + v[1]) / 2.0;
    if !(t.abs() <= mid) {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    let mut out = v.to_vec();
    out[0] = mid + t;
    out[1] = mid - t;
    ParamVector::new(out)
}

fn sorted_for_path(p: &ParamVector) -> Result<ParamVector> {
    if p.len() < 2 {
        return Err(Error::OutOfRange { name: "parameter count", value: p.len() as f64 });
    }
    if p.lambda() <= 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(p.sorted_desc())
}

/// Evaluate `E(t)` on `ts` (strictly increasing, within `[0, (p1 - p2)/2]`
/// after sorting `p` in decreasing order).
pub fn energy_binomial_path(p: &ParamVector, q: &CompoundingDist, ts: &[f64]) -> Result<TPath> {
    let p = sorted_for_path(p)?;
    let v = p.as_slice();
    check_increasing(ts, 0.0, (v[0] - v[1]) / 2.0, "t")?;
    let n = p.len();
    let reference = compound_binomial(n, p.lambda() / n as f64, q)?;
    let powers = q.powers(n);
    let laws = ts
        .par_iter()
        .map(|&t| {
            let pt = bernoulli_path_params(&p, t)?;
            Ok(compound::compound_with_powers(&powers, q, &compound::bernoulli_sum(&pt)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (energies, discarded): (Vec<f64>, Vec<f64>) = laws.iter().map(|w| cross_energy(w, &reference)).unzip();
    Ok(TPath {
        ts: ts.to_vec(),
        monotone_ok: is_non_increasing(&energies),
        energies,
        reference,
        discarded_mass: discarded.into_iter().fold(0.0, f64::max),
    })
}

/// Closed-form `d/dt C_Q b_{p_t}(x)`:
///
/// `-2t sum_y b_{(p3..pn)}(y) (Q^{*(y+2)} - 2 Q^{*(y+1)} + Q^{*y})(x)`,
///
/// indexed by `x` from 0.
pub fn binomial_path_derivative(p: &ParamVector, q: &CompoundingDist, t: f64) -> Result<Vec<f64>> {
    if p.len() < 2 {
        return Err(Error::OutOfRange { name: "parameter count", value: p.len() as f64 });
    }
    let rest = ParamVector::new(p.as_slice()[2..].to_vec())?;
    let b = compound::bernoulli_sum(&rest);
    let n = p.len();
    let powers = q.powers(n);
    let mut out = vec![0.0; n * q.last() + 1];
    for (y, by) in b.iter() {
        for (power, coef) in [(y + 2, 1.0), (y + 1, -2.0), (y, 1.0)] {
            for (x, v) in powers[power].iter() {
                out[x] += -2.0 * t * by * coef * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn uniform12() -> CompoundingDist {
        CompoundingDist::uniform(1, 2).unwrap()
    }

    #[test]
    fn thinning_matches_direct_binomial_sum() {
        let p = Pmf::normalize(&[0.1, 0.4, 0.3, 0.2], 0).unwrap();
        let alpha = 0.3f64;
        let t = thin(&p, alpha).unwrap();
        // k = 0: sum_x P(x) (1 - alpha)^x
        let direct0: f64 = p.iter().map(|(x, w)| w * (1.0 - alpha).powi(x as i32)).sum();
        assert!((t.get(0) - direct0).abs() < 1e-15);
        let direct3 = 0.2 * alpha.powi(3);
        assert!((t.get(3) - direct3).abs() < 1e-15);
        assert!((t.mean() - alpha * p.mean()).abs() < 1e-14);
    }

    #[test]
    fn u_alpha_examples() {
        let p = Pmf::normalize(&[0.2, 0.5, 0.3], 0).unwrap();
        assert_eq!(u_alpha(&p, 1.0, EPS).unwrap(), p);
        let po = Pmf::poisson(p.mean(), EPS).unwrap();
        assert!(u_alpha(&p, 0.0, EPS).unwrap().sup_distance(&po) < 1e-15);

        let po1 = Pmf::poisson(1.0, EPS).unwrap();
        assert!(u_alpha(&po1, 0.5, EPS).unwrap().sup_distance(&po1) <= 1e-10);
        assert!(matches!(u_alpha(&p, 1.5, EPS), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn u_alpha_preserves_mean() {
        let p = Pmf::normalize(&[0.05, 0.3, 0.4, 0.25], 1).unwrap();
        for alpha in linspace(0.0, 1.0, 11) {
            let u = u_alpha(&p, alpha, EPS).unwrap();
            assert!((u.mean() - p.mean()).abs() <= 1e-10, "alpha = {alpha}");
        }
    }

    #[test]
    fn u_alpha_q_examples() {
        let q = uniform12();
        let p = Pmf::normalize(&[0.2, 0.5, 0.3], 0).unwrap();
        assert_eq!(u_alpha_q(&p, &q, 1.0, EPS).unwrap(), compound(&q, &p));
        let cpo = compound::compound_poisson_mixture(p.mean(), &q, EPS).unwrap();
        assert!(u_alpha_q(&p, &q, 0.0, EPS).unwrap().sup_distance(&cpo) <= 1e-10);

        let b = Pmf::bernoulli(0.5).unwrap();
        let one = CompoundingDist::point(1).unwrap();
        assert_eq!(u_alpha_q(&b, &one, 0.5, EPS).unwrap(), u_alpha(&b, 0.5, EPS).unwrap());
    }

    #[test]
    fn derivative_formula_examples() {
        let po = Pmf::poisson(1.0, EPS).unwrap();
        let d = u_alpha_derivative(&po, 0.5, EPS).unwrap();
        assert!(d.iter().all(|v| v.abs() <= 1e-9));

        let p = Pmf::normalize(&[0.3, 0.1, 0.6], 0).unwrap();
        let d = u_alpha_derivative(&p, 0.4, EPS).unwrap();
        assert!(d.iter().sum::<f64>().abs() <= 1e-9);

        let h = 1e-5;
        let plus = u_alpha(&p, 0.4 + h, EPS).unwrap();
        let minus = u_alpha(&p, 0.4 - h, EPS).unwrap();
        for (y, dy) in d.iter().enumerate() {
            let fd = (plus.get(y) - minus.get(y)) / (2.0 * h);
            assert!((fd - dy).abs() <= 1e-6, "y = {y}: {fd} vs {dy}");
        }
        assert_eq!(u_alpha_derivative(&p, 0.0, EPS), Err(Error::AlphaZero));
    }

    #[test]
    fn score_examples() {
        let q = uniform12();
        let po = Pmf::poisson(2.0, EPS).unwrap();
        let s = score(&po, &q).unwrap();
        assert!(s.sup_abs() <= 1e-9);

        // Q = unit mass at 1 gives the scaled score (x+1)P(x+1)/(lambda P(x)) - 1
        let p = Pmf::binomial(4, 0.3).unwrap();
        let s = score(&p, &CompoundingDist::point(1).unwrap()).unwrap();
        let lambda = p.mean();
        for (x, r) in s.defined() {
            let direct = (x + 1) as f64 * p.get(x + 1) / (lambda * p.get(x)) - 1.0;
            assert!((r - direct).abs() < 1e-12, "x = {x}");
        }

        let s = score(&Pmf::bernoulli(0.5).unwrap(), &q).unwrap();
        assert!((s.values[0].unwrap() - 1.0).abs() < 1e-15);
        assert!(s.weighted_mean().abs() <= 1e-9);

        assert_eq!(score(&Pmf::point(0), &q), Err(Error::ZeroMean));
    }

    #[test]
    fn score_decreasing_examples() {
        let geo = CompoundingDist::geometric(0.5, EPS).unwrap();
        let v = check_score_decreasing(&Pmf::binomial(3, 0.3).unwrap(), &geo, 1e-9).unwrap();
        assert!(v.holds);
        let v = check_score_decreasing(&Pmf::poisson(1.0, EPS).unwrap(), &uniform12(), 1e-9).unwrap();
        assert!(v.holds);
        let err =
            check_score_decreasing(&Pmf::geometric(0.5, 0, EPS).unwrap(), &CompoundingDist::point(1).unwrap(), 1e-9);
        assert_eq!(err, Err(Error::HypothesisFailed(Hypothesis::UltraLogConcaveP)));
    }

    #[test]
    fn poisson_path_is_flat_for_poisson_input() {
        let po = Pmf::poisson(1.0, EPS).unwrap();
        let path = energy_poisson_path(&po, &uniform12(), &linspace(0.0, 1.0, 21), EPS).unwrap();
        let lo = path.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = path.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-9);
        assert!(path.monotone_ok);
    }

    #[test]
    fn poisson_path_decreases_under_hypotheses() {
        let geo = CompoundingDist::geometric(0.5, EPS).unwrap();
        let p = Pmf::binomial(8, 0.25).unwrap();
        let path = energy_poisson_path(&p, &geo, &linspace(0.0, 1.0, 21), EPS).unwrap();
        assert!(path.monotone_ok);
        assert!(path.energies[0] >= path.energies[20]);
    }

    #[test]
    fn path_rejects_bad_grids() {
        let p = Pmf::binomial(2, 0.5).unwrap();
        assert!(energy_poisson_path(&p, &uniform12(), &[0.5, 0.2], EPS).is_err());
        assert!(energy_poisson_path(&p, &uniform12(), &[0.0, 1.2], EPS).is_err());
        assert_eq!(energy_poisson_path(&Pmf::point(0), &uniform12(), &[0.0], EPS), Err(Error::ZeroMean));
    }

    #[test]
    fn bernoulli_path_params_examples() {
        let p = ParamVector::new(vec![0.6, 0.2, 0.1]).unwrap();
        let at_end = bernoulli_path_params(&p, 0.2).unwrap();
        assert!(at_end.as_slice().iter().zip(p.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(bernoulli_path_params(&p, 0.0).unwrap().as_slice(), &[0.4, 0.4, 0.1]);

        let tiny = ParamVector::new(vec![0.00125, 0.00875]).unwrap();
        let swapped = bernoulli_path_params(&tiny, 0.00375).unwrap();
        assert!((swapped.as_slice()[0] - 0.00875).abs() < 1e-15);
        assert!((swapped.as_slice()[1] - 0.00125).abs() < 1e-15);
        assert!((swapped.lambda() - tiny.lambda()).abs() < 1e-15);

        assert!(bernoulli_path_params(&p, 0.5).is_err());
        assert!(bernoulli_path_params(&ParamVector::new(vec![0.5]).unwrap(), 0.0).is_err());
    }

    #[test]
    fn binomial_path_examples() {
        let q = uniform12();
        let flat = energy_binomial_path(&ParamVector::new(vec![0.4, 0.4]).unwrap(), &q, &[0.0]).unwrap();
        assert_eq!(flat.energies.len(), 1);

        let p = ParamVector::new(vec![0.9, 0.5]).unwrap();
        let path = energy_binomial_path(&p, &q, &linspace(0.0, 0.2, 11)).unwrap();
        assert!(path.reference.is_log_concave(1e-9).holds);
        assert!(path.monotone_ok);
        assert!(energy_binomial_path(&p, &q, &[0.0, 0.3]).is_err());
    }

    #[test]
    fn binomial_path_derivative_matches_finite_differences() {
        let q = uniform12();
        let p = ParamVector::new(vec![0.8, 0.3, 0.6]).unwrap();
        let (t, h) = (0.1, 1e-5);
        let d = binomial_path_derivative(&p, &q, t).unwrap();
        let at = |s: f64| compound(&q, &compound::bernoulli_sum(&bernoulli_path_params(&p, s).unwrap()));
        let (plus, minus) = (at(t + h), at(t - h));
        for (x, dx) in d.iter().enumerate() {
            let fd = (plus.get(x) - minus.get(x)) / (2.0 * h);
            assert!((fd - dx).abs() <= 1e-6, "x = {x}");
        }
    }

    #[test]
    fn csv_layout() {
        assert_eq!(path_csv(&[0.0, 0.5], &[1.25, 1.0]), "alpha_or_t,energy\n0,1.25\n0.5,1\n");
    }
}
