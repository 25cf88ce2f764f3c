//! Exact rational arithmetic for pmfs whose weights are ratios of integers.

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

/// A pmf with rational weights, dense from `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    offset: usize,
    weights: Vec<BigRational>,
}

pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `binom(n, k)` as a rational, zero when `k` is negative or exceeds `n`.
pub fn binomial(n: i64, k: i64) -> BigRational {
    if n < 0 || k < 0 || k > n {
        return BigRational::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(acc)
}

impl ExactPmf {
    /// Rational weights starting at `offset`; the caller guarantees they sum
    /// to one.
    pub fn new(offset: usize, weights: Vec<BigRational>) -> Self {
        ExactPmf { offset, weights }
    }

    pub fn point(k: usize) -> Self {
        ExactPmf { offset: k, weights: vec![BigRational::one()] }
    }

    /// Mass `1 - q2` at 1 and `q2` at 2.
    pub fn two_point(q2: &BigRational) -> Self {
        ExactPmf::new(1, vec![BigRational::one() - q2, q2.clone()])
    }

    pub fn get(&self, x: usize) -> BigRational {
        x.checked_sub(self.offset).and_then(|i| self.weights.get(i)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn last(&self) -> usize {
        self.offset + self.weights.len() - 1
    }

    pub fn total_mass(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, w| acc + w)
    }

    pub fn convolve(&self, other: &ExactPmf) -> ExactPmf {
        let mut out = vec![BigRational::zero(); self.weights.len() + other.weights.len() - 1];
        for (i, a) in self.weights.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.weights.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ExactPmf { offset: self.offset + other.offset, weights: out }
    }

    /// `[self^{*0}, self^{*1}, ..., self^{*n}]`.
    pub fn powers(&self, n: usize) -> Vec<ExactPmf> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(ExactPmf::point(0));
        for j in 1..=n {
            let next = out[j - 1].convolve(self);
            out.push(next);
        }
        out
    }

    /// Exact `P(x)^2 >= P(x-1) P(x+1)` with no interior zeros.
    pub fn is_log_concave(&self) -> bool {
        let w = &self.weights;
        let first = w.iter().position(|v| v.is_positive());
        let last = w.iter().rposition(|v| v.is_positive());
        let (Some(first), Some(last)) = (first, last) else { return false };
        (first..=last).all(|i| w[i].is_positive()) && (first + 1..last).all(|i| &w[i] * &w[i] >= &w[i - 1] * &w[i + 1])
    }

    pub fn to_f64(&self) -> crate::Result<crate::Pmf> {
        use num::ToPrimitive;
        let weights = self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect();
        crate::Pmf::from_parts_exact(self.offset, weights, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), ratio(10, 1));
        assert_eq!(binomial(5, 6), ratio(0, 1));
        assert_eq!(binomial(5, -1), ratio(0, 1));
        assert_eq!(binomial(0, 0), ratio(1, 1));
    }

    #[test]
    fn powers_keep_unit_mass() {
        let q = ExactPmf::two_point(&ratio(1, 3));
        for (j, qj) in q.powers(6).iter().enumerate() {
            assert_eq!(qj.total_mass(), ratio(1, 1), "j = {j}");
        }
        let q2 = &q.powers(2)[2];
        assert_eq!(q2.get(2), ratio(4, 9));
        assert_eq!(q2.get(3), ratio(4, 9));
        assert_eq!(q2.get(4), ratio(1, 9));
    }

    #[test]
    fn exact_log_concavity() {
        assert!(ExactPmf::new(0, vec![ratio(1, 4), ratio(1, 2), ratio(1, 4)]).is_log_concave());
        assert!(!ExactPmf::new(0, vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)]).is_log_concave());
        assert!(!ExactPmf::new(0, vec![ratio(1, 2), ratio(0, 1), ratio(1, 2)]).is_log_concave());
        let q = ExactPmf::two_point(&ratio(1, 2));
        assert!(q.to_f64().unwrap().is_log_concave(0.0).holds);
    }
}
