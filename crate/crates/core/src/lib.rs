//! Discrete compound distributions on the nonnegative integers, their
//! entropies, and numerical checks of maximum-entropy and log-concavity
//! statements about them.
//!
//! The building blocks are:
//!
//! - [`Pmf`]: a finite-support probability mass function stored densely as an
//!   offset plus a weight vector, with the mass lost to truncation recorded.
//! - [`CompoundingDist`]: a pmf supported on `{1, 2, ...}`, the law of the
//!   summands in a random sum.
//! - [`compound`](compound::compound): the law of `X_1 + ... + X_Y` for
//!   `Y ~ P` and i.i.d. `X_j ~ Q`.
//!
//! On top of these sit the thinning semigroup and its energy functionals
//! ([`semigroup`]), entropy tools and a random ultra-log-concave generator
//! ([`info`]), theorem-level verification reports ([`verify`]) and
//! independent-set / matroid counting sequences ([`combinatorics`]).
//!
//! ```
//! use compound_entropy::{compound, CompoundingDist, Pmf};
//!
//! let q = CompoundingDist::uniform(1, 2).unwrap();
//! let panjer = compound::compound_poisson_panjer(0.01, &q, 10).unwrap();
//! let mixture = compound::compound_poisson_mixture(0.01, &q, 1e-12).unwrap();
//! assert!(panjer.sup_distance(&mixture) < 1e-10);
//! assert!(!panjer.is_log_concave(1e-9).holds);
//! # let _ = Pmf::point(0);
//! ```

#![forbid(unsafe_code)]
// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod compound;
mod error;
pub mod exact;
pub mod info;
pub mod pmf;
pub mod semigroup;
pub mod verify;

pub use compound::{CompoundingDist, ParamVector};
pub use error::{Error, Result};
pub use info::{Base, EntropyValue};
pub use pmf::{Pmf, ShapeVerdict};
pub use verify::{Settings, Status, VerificationReport};

/// Mass discarded when truncating infinite-support constructions.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Relative tolerance for shape tests and inequality checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Probabilities at or below this value are treated as numerically absent
/// when taking logarithms or ratios.
pub const DENSITY_FLOOR: f64 = 1e-14;
