//! Compound distributions `C_Q P`: the law of `X_1 + ... + X_Y` with
//! `Y ~ P` and i.i.d. summands `X_j ~ Q` on `{1, 2, ...}`.
//!
//! Compound Poisson laws are available through two independent routes, the
//! Poisson mixture of convolution powers and the Panjer recursion, so each
//! can serve as an oracle for the other.

use std::ops::Deref;

use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, ExactPmf};
use crate::pmf::{check_probability, Pmf};

/// Hard cap on the Panjer index when running to a mass target.
pub const PANJER_MAX_INDEX: usize = 1_000_000;

/// A pmf with no mass at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Pmf", into = "Pmf")]
pub struct CompoundingDist(Pmf);

impl TryFrom<Pmf> for CompoundingDist {
    type Error = Error;

    fn try_from(pmf: Pmf) -> Result<Self> {
        CompoundingDist::new(pmf)
    }
}

impl From<CompoundingDist> for Pmf {
    fn from(q: CompoundingDist) -> Pmf {
        q.0
    }
}

impl Deref for CompoundingDist {
    type Target = Pmf;

    fn deref(&self) -> &Pmf {
        &self.0
    }
}

impl CompoundingDist {
    pub fn new(pmf: Pmf) -> Result<Self> {
        if pmf.offset() == 0 {
            return Err(Error::NotCompounding { offset: 0 });
        }
        Ok(CompoundingDist(pmf))
    }

    pub fn point(k: usize) -> Result<Self> {
        Self::new(Pmf::point(k))
    }

    pub fn uniform(a: usize, b: usize) -> Result<Self> {
        Self::new(Pmf::uniform(a, b)?)
    }

    /// Geometric `Q(x) = a (1 - a)^(x - 1)` on `{1, 2, ...}`, truncated at
    /// `tail_eps` and renormalized, so the result is an honest finite-support
    /// log-concave distribution within `tail_eps` of the geometric law.
    pub fn geometric(a: f64, tail_eps: f64) -> Result<Self> {
        let truncated = Pmf::geometric(a, 1, tail_eps)?;
        let mut q = Pmf::normalize(truncated.weights(), 1)?;
        q = Pmf::from_parts_exact(q.offset(), q.weights().to_vec(), truncated.tail_eps())?;
        Self::new(q)
    }

    pub fn pmf(&self) -> &Pmf {
        &self.0
    }

    /// `Q(x)`.
    pub fn q(&self, x: usize) -> f64 {
        self.0.get(x)
    }

    /// `[Q^{*0}, Q^{*1}, ..., Q^{*n}]`.
    pub fn powers(&self, n: usize) -> Vec<Pmf> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Pmf::point(0));
        for j in 1..=n {
            let next = out[j - 1].convolve(&self.0);
            out.push(next);
        }
        out
    }
}

/// Bernoulli parameters `p = (p_1, ..., p_n)`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        for &pi in &p {
            check_probability("Bernoulli parameter", pi)?;
        }
        Ok(ParamVector(p))
    }

    /// `n` copies of `lambda / n`.
    pub fn equal(n: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `lambda = sum p_i`.
    pub fn lambda(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Entries in decreasing order.
    pub fn sorted_desc(&self) -> ParamVector {
        let mut p = self.0.clone();
        p.sort_by(|a, b| b.total_cmp(a));
        ParamVector(p)
    }
}

/// `C_Q P(x) = sum_y P(y) Q^{*y}(x)`.
pub fn compound(q: &CompoundingDist, p: &Pmf) -> Pmf {
    compound_with_powers(&q.powers(p.last()), q, p)
}

pub(crate) fn compound_with_powers(powers: &[Pmf], q: &CompoundingDist, p: &Pmf) -> Pmf {
    let mut dense = vec![0.0; p.last() * q.last() + 1];
    for (y, py) in p.iter() {
        if py == 0.0 {
            continue;
        }
        for (x, qx) in powers[y].iter() {
            dense[x] += py * qx;
        }
    }
    let tail = p.tail_eps() + p.mean() * q.tail_eps();
    Pmf::from_dense(dense, tail).expect("compound of a pmf has positive mass")
}

/// Law of a sum of independent Bern(p_i).
pub fn bernoulli_sum(p: &ParamVector) -> Pmf {
    let mut dense = vec![1.0];
    for &pi in p.as_slice() {
        dense.push(0.0);
        for k in (0..dense.len()).rev() {
            let moved = if k > 0 { dense[k - 1] * pi } else { 0.0 };
            dense[k] = dense[k] * (1.0 - pi) + moved;
        }
    }
    Pmf::from_dense(dense, 0.0).expect("Bernoulli sum has unit mass")
}

/// `CBern(p, Q)`: mass `1 - p` at 0 and `p Q(x)` at `x >= 1`.
pub fn compound_bernoulli(p: f64, q: &CompoundingDist) -> Result<Pmf> {
    check_probability("p", p)?;
    let mut dense = vec![0.0; q.last() + 1];
    dense[0] = 1.0 - p;
    for (x, qx) in q.iter() {
        dense[x] = p * qx;
    }
    Pmf::from_dense(dense, p * q.tail_eps())
}

/// `CBin(n, p, Q)`, the `n`-fold convolution of `CBern(p, Q)`.
pub fn compound_binomial(n: usize, p: f64, q: &CompoundingDist) -> Result<Pmf> {
    Ok(compound_bernoulli(p, q)?.power(n))
}

/// `CPo(lambda, Q)` as the Poisson mixture `sum_j Po(lambda)(j) Q^{*j}`, with
/// the mixing index cut where the Poisson tail drops below `tail_eps`.
pub fn compound_poisson_mixture(lambda: f64, q: &CompoundingDist, tail_eps: f64) -> Result<Pmf> {
    let mixing = Pmf::poisson(lambda, tail_eps)?;
    Ok(compound(q, &mixing))
}

/// `CPo(lambda, Q)` on `0..=n` by the Panjer recursion
/// `k p_k = lambda sum_{j=1}^{k} j Q(j) p_{k-j}`, `p_0 = exp(-lambda)`.
///
/// All terms are nonnegative so the recursion is stable; for large rates the
/// index `n` has to grow with `lambda` before the running mass approaches 1.
pub fn compound_poisson_panjer(lambda: f64, q: &CompoundingDist, n: usize) -> Result<Pmf> {
    let (dense, _) = panjer_terms(lambda, q, |k, _| k >= n)?;
    Pmf::from_dense(dense, 0.0)
}

/// Panjer recursion run until the accumulated mass reaches `1 - tail_eps`
/// (or [`PANJER_MAX_INDEX`]), and at least up to `min_index`.
pub fn compound_poisson(lambda: f64, q: &CompoundingDist, tail_eps: f64, min_index: usize) -> Result<Pmf> {
    // a defective Q (tail_eps > 0 with sum < 1) caps the reachable mass
    let reachable = (-lambda * (1.0 - q.total_mass()).max(0.0)).exp();
    let target = (1.0 - tail_eps) * reachable - 64.0 * f64::EPSILON;
    let (dense, mass) = panjer_terms(lambda, q, |k, mass| (k >= min_index && mass >= target) || k >= PANJER_MAX_INDEX)?;
    Pmf::from_dense(dense, tail_eps.max(1.0 - mass))
}

fn panjer_terms(lambda: f64, q: &CompoundingDist, mut done: impl FnMut(usize, f64) -> bool) -> Result<(Vec<f64>, f64)> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeRate(lambda));
    }
    let p0 = (-lambda).exp();
    if p0 == 0.0 {
        return Err(Error::RateTooLarge(lambda));
    }
    // jq[j] = lambda * j * Q(j)
    let jq: Vec<f64> = (0..=q.last()).map(|j| lambda * j as f64 * q.q(j)).collect();
    let mut p = vec![p0];
    let mut mass = p0;
    let mut k = 0;
    while !done(k, mass) {
        k += 1;
        let lo = q.offset();
        let hi = k.min(q.last());
        let s: f64 = (lo..=hi).map(|j| jq[j] * p[k - j]).sum();
        let pk = s / k as f64;
        mass += pk;
        p.push(pk);
    }
    Ok((p, mass))
}

/// `lambda q3 + 3 lambda^2 q1 q2 + lambda^3 q1^3`, the common upper bound on
/// the third moments along the thinning path.
pub fn third_moment_bound(lambda: f64, q: &CompoundingDist) -> f64 {
    let (q1, q2, q3) = (q.moment(1), q.moment(2), q.moment(3));
    lambda * q3 + 3.0 * lambda * lambda * q1 * q2 + lambda.powi(3) * q1.powi(3)
}

/// Result of [`two_point_ratio_identity`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub checked: usize,
    /// First `(r, x, y, k)` where the two sides differ.
    pub first_failure: Option<(usize, usize, usize, usize)>,
}

/// For `Q` on `{1, 2}` with `Q(2) = q2`, check in exact arithmetic that
///
/// `binom(r, y) Q^{*y}(k) Q^{*(r-y)}(2x - k) / Q^{*r}(2x)
///     = binom(2x - r, k - y) binom(2r - 2x, 2y - k)`
///
/// for every `r <= r_max`, every `x` with `Q^{*r}(2x) > 0`, every `y <= r`
/// and every `k <= 2x`.
pub fn two_point_ratio_identity(q2: &BigRational, r_max: usize) -> IdentityCheck {
    let q = ExactPmf::two_point(q2);
    let powers = q.powers(r_max);
    let mut checked = 0;
    for r in 0..=r_max {
        for x in r.div_ceil(2)..=r {
            let denom = powers[r].get(2 * x);
            if denom.is_zero() {
                continue;
            }
            for y in 0..=r {
                let z = r - y;
                for k in 0..=2 * x {
                    let lhs =
                        exact::binomial(r as i64, y as i64) * powers[y].get(k) * powers[z].get(2 * x - k) / &denom;
                    let (r_, x_, y_, k_) = (r as i64, x as i64, y as i64, k as i64);
                    let rhs = exact::binomial(2 * x_ - r_, k_ - y_) * exact::binomial(2 * r_ - 2 * x_, 2 * y_ - k_);
                    checked += 1;
                    if lhs != rhs {
                        return IdentityCheck { checked, first_failure: Some((r, x, y, k)) };
                    }
                }
            }
        }
    }
    IdentityCheck { checked, first_failure: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn uniform12() -> CompoundingDist {
        CompoundingDist::uniform(1, 2).unwrap()
    }

    #[test]
    fn compounding_rejects_mass_at_zero() {
        assert_eq!(CompoundingDist::new(Pmf::bernoulli(0.5).unwrap()), Err(Error::NotCompounding { offset: 0 }));
        assert!(CompoundingDist::point(0).is_err());
    }

    #[test]
    fn compound_examples() {
        let q = uniform12();
        assert_eq!(compound(&q, &Pmf::point(0)), Pmf::point(0));

        let p = Pmf::normalize(&[0.2, 0.5, 0.3], 0).unwrap();
        assert!(compound(&CompoundingDist::point(1).unwrap(), &p).sup_distance(&p) == 0.0);

        let c = compound(&q, &Pmf::bernoulli(0.5).unwrap());
        assert_eq!(c.weights(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn bernoulli_sum_examples() {
        let b = bernoulli_sum(&ParamVector::new(vec![0.5, 0.5]).unwrap());
        assert_eq!(b.weights(), &[0.25, 0.5, 0.25]);
        let b = bernoulli_sum(&ParamVector::new(vec![0.00125, 0.00875]).unwrap());
        assert!((b.get(0) - 0.99875 * 0.99125).abs() < 1e-15);
        assert_eq!(bernoulli_sum(&ParamVector::new(vec![]).unwrap()), Pmf::point(0));
        assert!(ParamVector::new(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn compound_bernoulli_examples() {
        let q = uniform12();
        assert_eq!(compound_bernoulli(0.0, &q).unwrap(), Pmf::point(0));
        assert_eq!(compound_bernoulli(1.0, &q).unwrap(), *q.pmf());
        let c = compound_bernoulli(0.7, &q).unwrap();
        assert!(c.sup_distance(&Pmf::normalize(&[0.3, 0.35, 0.35], 0).unwrap()) < 1e-15);
        assert!(matches!(compound_bernoulli(1.2, &q), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn compound_binomial_examples() {
        let q = uniform12();
        let c = compound_binomial(2, 0.005, &q).unwrap();
        assert!((c.get(0) - 0.990025).abs() < 1e-15);
        assert_eq!(compound_binomial(4, 0.0, &q).unwrap(), Pmf::point(0));
        assert_eq!(compound_binomial(1, 0.3, &q).unwrap(), compound_bernoulli(0.3, &q).unwrap());
        assert!(compound_binomial(3, -0.1, &q).is_err());
    }

    #[test]
    fn compound_binomial_matches_binomial_mixture() {
        let q = CompoundingDist::new(Pmf::normalize(&[0.5, 0.3, 0.2], 1).unwrap()).unwrap();
        for n in [1, 2, 5, 9] {
            let direct = compound_binomial(n, 0.37, &q).unwrap();
            let mixture = compound(&q, &Pmf::binomial(n, 0.37).unwrap());
            assert!(direct.sup_distance(&mixture) <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn mixture_examples() {
        let q = uniform12();
        assert_eq!(compound_poisson_mixture(0.0, &q, 1e-12).unwrap(), Pmf::point(0));
        let one = CompoundingDist::point(1).unwrap();
        let po = Pmf::poisson(1.0, 1e-12).unwrap();
        assert!(compound_poisson_mixture(1.0, &one, 1e-12).unwrap().sup_distance(&po) <= 1e-10);

        let c = compound_poisson_mixture(0.01, &q, 1e-12).unwrap();
        assert!((c.get(0) - 0.9900498).abs() < 1e-7);
        assert!((c.get(1) - 0.0049502).abs() < 1e-7);
        assert!((c.get(2) - 0.0049626).abs() < 1e-7);
        assert!(c.total_mass() >= 1.0 - 2e-12);
        assert_eq!(compound_poisson_mixture(-1.0, &q, 1e-12), Err(Error::NegativeRate(-1.0)));
    }

    #[test]
    fn panjer_examples() {
        let q = uniform12();
        let lambda = 0.01f64;
        let p = compound_poisson_panjer(lambda, &q, 10).unwrap();
        let p0 = (-lambda).exp();
        // one and two recursion steps by hand
        let p1 = lambda * 0.5 * p0;
        let p2 = (lambda * 0.5 * p1 + 2.0 * lambda * 0.5 * p0) / 2.0;
        assert!((p.get(0) - p0).abs() < 1e-17);
        assert!((p.get(1) - p1).abs() < 1e-17);
        assert!((p.get(2) - p2).abs() < 1e-17);
        assert!((p1 - 0.0049502).abs() < 1e-7 && (p2 - 0.0049626).abs() < 1e-7);

        let mixture = compound_poisson_mixture(lambda, &q, 1e-12).unwrap();
        assert!(p.sup_distance(&mixture) <= 1e-10);
        assert_eq!(compound_poisson_panjer(-0.5, &q, 3), Err(Error::NegativeRate(-0.5)));
    }

    #[test]
    fn panjer_to_mass_target() {
        let q = CompoundingDist::geometric(0.5, 1e-12).unwrap();
        let p = compound_poisson(2.0, &q, 1e-12, 0).unwrap();
        assert!(p.total_mass() >= 1.0 - 1e-12 - 1e-14);
        let p = compound_poisson(0.01, &uniform12(), 1e-12, 50).unwrap();
        assert_eq!(p.last(), 50);
    }

    #[test]
    fn third_moment_bound_examples() {
        assert!((third_moment_bound(1.0, &CompoundingDist::point(1).unwrap()) - 5.0).abs() < 1e-15);
        let b = third_moment_bound(0.01, &uniform12());
        assert!((b - (0.045 + 0.001125 + 3.375e-6)).abs() < 1e-15);
        assert_eq!(third_moment_bound(0.0, &uniform12()), 0.0);
    }

    #[test]
    fn geometric_compounding_is_normalized() {
        let q = CompoundingDist::geometric(0.5, 1e-12).unwrap();
        assert!((q.total_mass() - 1.0).abs() < 1e-15);
        assert!(q.tail_eps() > 0.0 && q.tail_eps() < 1e-12);
        assert!((q.q(1) - 0.5).abs() < 1e-11);
        assert!(q.is_log_concave(0.0).holds);
    }

    #[test]
    fn two_point_identity_small() {
        let check = two_point_ratio_identity(&ratio(1, 3), 4);
        assert_eq!(check.first_failure, None);
        assert!(check.checked > 0);
    }
}
