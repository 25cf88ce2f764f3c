//! Parsers for the `kind:args` distribution strings accepted on the command
//! line.

use anyhow::{anyhow, bail, Context, Result};
use compound_entropy::info::sample_ulc;
use compound_entropy::{CompoundingDist, Pmf};

fn split(spec: &str) -> (&str, &str) {
    spec.split_once(':').unwrap_or((spec, ""))
}

fn numbers<T: std::str::FromStr>(args: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    args.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow!("{what}: bad number {s:?}: {e}")))
        .collect()
}

fn exactly<T: Copy, const N: usize>(v: Vec<T>, spec: &str) -> Result<[T; N]> {
    <[T; N]>::try_from(v).map_err(|_| anyhow!("{spec:?} expects {N} argument(s)"))
}

fn read_pmf(path: &str) -> Result<Pmf> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(Pmf::from_json(&text)?)
}

/// `uniform:a,b`, `geometric:p`, `point:k`, `weights:w1,w2,...` (starting at
/// 1) or `file:path` (pmf JSON).
pub fn compounding(spec: &str, tail_eps: f64) -> Result<CompoundingDist> {
    let (kind, args) = split(spec);
    let q = match kind {
        "uniform" => {
            let [a, b] = exactly(numbers::<usize>(args, spec)?, spec)?;
            CompoundingDist::uniform(a, b)?
        }
        "geometric" => {
            let [p] = exactly(numbers::<f64>(args, spec)?, spec)?;
            CompoundingDist::geometric(p, tail_eps)?
        }
        "point" => {
            let [k] = exactly(numbers::<usize>(args, spec)?, spec)?;
            CompoundingDist::point(k)?
        }
        "weights" => CompoundingDist::new(Pmf::normalize(&numbers::<f64>(args, spec)?, 1)?)?,
        "file" => CompoundingDist::new(read_pmf(args)?)?,
        _ => bail!("unknown compounding distribution {spec:?}; expected uniform:a,b, geometric:p, point:k, weights:..., or file:path"),
    };
    Ok(q)
}

/// `point:k`, `uniform:a,b`, `bernoulli:p`, `binomial:n,p`, `poisson:lambda`,
/// `geometric:a`, `ulc:max_support,lambda` (uses the seed),
/// `weights:w0,w1,...` or `file:path`.
pub fn pmf(spec: &str, tail_eps: f64, seed: Option<u64>) -> Result<Pmf> {
    let (kind, args) = split(spec);
    let p = match kind {
        "point" => {
            let [k] = exactly(numbers::<usize>(args, spec)?, spec)?;
            Pmf::point(k)
        }
        "uniform" => {
            let [a, b] = exactly(numbers::<usize>(args, spec)?, spec)?;
            Pmf::uniform(a, b)?
        }
        "bernoulli" => {
            let [p] = exactly(numbers::<f64>(args, spec)?, spec)?;
            Pmf::bernoulli(p)?
        }
        "binomial" => {
            let [n, p] = exactly(numbers::<f64>(args, spec)?, spec)?;
            if n < 0.0 || n.fract() != 0.0 {
                bail!("{spec:?}: n must be a nonnegative integer");
            }
            Pmf::binomial(n as usize, p)?
        }
        "poisson" => {
            let [l] = exactly(numbers::<f64>(args, spec)?, spec)?;
            Pmf::poisson(l, tail_eps)?
        }
        "geometric" => {
            let [a] = exactly(numbers::<f64>(args, spec)?, spec)?;
            Pmf::geometric(a, 0, tail_eps)?
        }
        "ulc" => {
            let [m, l] = exactly(numbers::<f64>(args, spec)?, spec)?;
            let seed = seed.ok_or_else(|| anyhow!("{spec:?} needs --seed"))?;
            if m < 0.0 || m.fract() != 0.0 {
                bail!("{spec:?}: support must be a nonnegative integer");
            }
            sample_ulc(m as usize, l, seed)?
        }
        "weights" => Pmf::normalize(&numbers::<f64>(args, spec)?, 0)?,
        "file" => read_pmf(args)?,
        _ => bail!("unknown distribution {spec:?}"),
    };
    Ok(p)
}

pub fn params(list: &str) -> Result<Vec<f64>> {
    numbers::<f64>(list, "parameter list")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compounding_strings() {
        assert_eq!(compounding("uniform:1,2", 1e-12).unwrap(), CompoundingDist::uniform(1, 2).unwrap());
        assert_eq!(compounding("point:3", 1e-12).unwrap().offset(), 3);
        assert_eq!(compounding("weights:0.5,0.5", 1e-12).unwrap(), CompoundingDist::uniform(1, 2).unwrap());
        assert!(compounding("geometric:0.5", 1e-12).unwrap().last() > 30);
        assert!(compounding("point:0", 1e-12).is_err());
        assert!(compounding("uniform:1", 1e-12).is_err());
        assert!(compounding("zeta:2", 1e-12).is_err());
    }

    #[test]
    fn pmf_strings() {
        assert_eq!(pmf("binomial:3,0.5", 1e-12, None).unwrap().weights(), &[0.125, 0.375, 0.375, 0.125]);
        assert!(pmf("ulc:10,2", 1e-12, None).is_err());
        assert!((pmf("ulc:10,2", 1e-12, Some(1)).unwrap().mean() - 2.0).abs() < 1e-9);
        assert!(pmf("binomial:2.5,0.5", 1e-12, None).is_err());
        assert_eq!(params("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
    }
}
