use thiserror::Error;

use crate::combinatorics::Axiom;
use crate::verify::Hypothesis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("every weight is zero")]
    AllZero,
    #[error("weight at index {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("total mass {sum} is inconsistent with tail_eps {tail_eps}")]
    BadMass { sum: f64, tail_eps: f64 },
    #[error("distribution has zero mean")]
    ZeroMean,
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("rate {0} is too large: exp(-rate) underflows")]
    RateTooLarge(f64),
    #[error("compounding distribution must put no mass at 0 (offset {offset})")]
    NotCompounding { offset: usize },
    #[error("derivative formula is undefined at alpha = 0")]
    AlphaZero,
    #[error("mass {mass} sits where the reference distribution vanishes")]
    SupportMismatch { mass: f64 },
    #[error("mean {lambda} is unreachable on support 0..={max_support}")]
    Infeasible { lambda: f64, max_support: usize },
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(Hypothesis),
    #[error("Q(1) = 0")]
    ZeroQ1,
    #[error("compounding distribution has mass outside {{1, 2}}")]
    BadSupport,
    #[error("{what} has {size} elements; limit is {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("violates the {0} axiom")]
    NotAMatroid(Axiom),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error: {0}")]
    Parse(String),
}
