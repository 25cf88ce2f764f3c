//! Entropy, relative entropy, a Poisson entropy bound, and a seeded generator
//! of random ultra-log-concave pmfs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::DENSITY_FLOOR;

/// Mass allowed where the reference of a relative entropy vanishes.
const SUPPORT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    #[default]
    Nat,
    Bit,
}

impl Base {
    /// Convert a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Base::Nat => nats,
            Base::Bit => nats / std::f64::consts::LN_2,
        }
    }
}

impl std::str::FromStr for Base {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nat" | "nats" => Ok(Base::Nat),
            "bit" | "bits" => Ok(Base::Bit),
            other => Err(Error::Parse(format!("unknown base {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub base: Base,
}

impl EntropyValue {
    fn from_nats(nats: f64, base: Base) -> Self {
        EntropyValue { value: base.from_nats(nats), base }
    }
}

/// Shannon entropy in nats, `0 log 0 = 0`.
pub fn entropy_nats(p: &Pmf) -> f64 {
    -p.weights().iter().filter(|&&w| w > 0.0).map(|&w| w * w.ln()).sum::<f64>()
}

pub fn entropy(p: &Pmf, base: Base) -> EntropyValue {
    EntropyValue::from_nats(entropy_nats(p), base)
}

/// `D(P || R)` in nats.
///
/// Points where `R` is at or below the density floor contribute nothing, but
/// if `P` puts more than `1e-12` there the divergence is infinite and an
/// error is returned.
pub fn relative_entropy_nats(p: &Pmf, r: &Pmf) -> Result<f64> {
    let mut d = 0.0;
    let mut stray = 0.0;
    for (x, px) in p.iter().filter(|&(_, w)| w > 0.0) {
        let rx = r.get(x);
        if rx > DENSITY_FLOOR {
            d += px * (px / rx).ln();
        } else {
            stray += px;
        }
    }
    if stray > SUPPORT_SLACK {
        return Err(Error::SupportMismatch { mass: stray });
    }
    Ok(d)
}

pub fn relative_entropy(p: &Pmf, r: &Pmf, base: Base) -> Result<EntropyValue> {
    Ok(EntropyValue::from_nats(relative_entropy_nats(p, r)?, base))
}

/// `(1/2) log(2 pi e (lambda + 1/12))` in nats, an upper bound on
/// `H(Po(lambda))`.
pub fn poisson_entropy_upper(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeRate(lambda));
    }
    let e = std::f64::consts::E;
    Ok(0.5 * (2.0 * std::f64::consts::PI * e * (lambda + 1.0 / 12.0)).ln())
}

/// Random ultra-log-concave pmfs on `0..=max_support` with a prescribed mean.
///
/// A sample is `P(x) ∝ exp(phi(x)) mu^x / x!` where `phi` is concave with
/// second differences drawn uniformly from `[-curvature, 0]`. The ratio to a
/// Poisson pmf is log-concave, so `P` is ultra-log-concave for every `mu`;
/// `mu` is then found by bisection on `log mu` so the mean hits the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlcSampler {
    pub max_support: usize,
    pub curvature: f64,
}

impl UlcSampler {
    pub const DEFAULT_CURVATURE: f64 = 0.5;

    pub fn new(max_support: usize) -> Self {
        UlcSampler { max_support, curvature: Self::DEFAULT_CURVATURE }
    }

    pub fn with_curvature(mut self, curvature: f64) -> Self {
        self.curvature = curvature;
        self
    }

    pub fn sample(&self, lambda: f64, seed: u64) -> Result<Pmf> {
        let m = self.max_support;
        if !(lambda > 0.0) || lambda >= m as f64 {
            return Err(Error::Infeasible { lambda, max_support: m });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // base log-weights: phi(x) - log x!
        let mut base = Vec::with_capacity(m + 1);
        let (mut phi, mut slope, mut log_fact) = (0.0f64, 0.0f64, 0.0f64);
        for x in 0..=m {
            if x >= 1 {
                log_fact += (x as f64).ln();
            }
            if x >= 2 {
                slope -= self.curvature * rng.random::<f64>();
            }
            if x >= 1 {
                phi += slope;
            }
            base.push(phi - log_fact);
        }
        let mean_at = |s: f64| tilted(&base, s).1;
        let (mut lo, mut hi) = (lambda.ln() - 1.0, lambda.ln() + 1.0);
        while mean_at(lo) > lambda {
            lo -= 2.0 * (hi - lo);
        }
        while mean_at(hi) < lambda {
            hi += 2.0 * (hi - lo);
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mean_at(mid) < lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (lo_w, lo_mean) = tilted(&base, lo);
        let (hi_w, hi_mean) = tilted(&base, hi);
        let weights = if (lo_mean - lambda).abs() <= (hi_mean - lambda).abs() { lo_w } else { hi_w };
        Pmf::normalize(&weights, 0)
    }
}

/// Weights `exp(base[x] + s x)` scaled to max 1, and their mean.
fn tilted(base: &[f64], s: f64) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = base.iter().enumerate().map(|(x, b)| b + s * x as f64).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let mean = w.iter().enumerate().map(|(x, wx)| x as f64 * wx).sum::<f64>() / total;
    (w, mean)
}

/// [`UlcSampler::sample`] with the default curvature.
pub fn sample_ulc(max_support: usize, lambda: f64, seed: u64) -> Result<Pmf> {
    UlcSampler::new(max_support).sample(lambda, seed)
}
