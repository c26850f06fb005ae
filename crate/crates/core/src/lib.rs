//! Analysis toolkit for sparsity constrained nonlinear optimization,
//!
//! ```text
//! min f(x)  s.t.  ||x||_0 <= s
//! ```
//!
//! with polynomial objectives over exact rational coefficients.
//!
//! The crate enumerates and classifies M-stationary points (support-restricted
//! critical points), cross-checks them against S-stationarity of the
//! continuous relaxation, basic feasibility and coordinate-wise minimality,
//! verifies the Morse relation between local minimizers and index-one saddle
//! points on discretized lower level sets, and confirms the multi-cell
//! attachment combinatorics via simplicial homology.
//!
//! All floating point machinery is generic over [`Real`] (`f32` or `f64`);
//! polynomials are generic over their coefficient field. The aliases at the
//! crate root fix the common concrete choices.

pub mod enumeration;
pub mod error;
pub mod globalmorse;
pub mod linalg;
pub mod polyfun;
pub mod relaxation;
pub mod report;
pub mod scalar;
pub mod stationarity;
pub mod topology;
mod unionfind;

pub use error::{Error, ParseError, Result};
pub use scalar::{Field, Gf2, Rational, Real};

/// Exact polynomial with rational coefficients.
pub type RationalPolynomial = polyfun::Polynomial<Rational>;
/// Exact univariate polynomial with rational coefficients.
pub type RationalUnivariate = polyfun::UnivariatePolynomial<Rational>;
/// Polynomial with `f64` coefficients, used for fast evaluation.
pub type Polynomial64 = polyfun::Polynomial<f64>;

/// Double precision problem instance.
pub type Problem64 = stationarity::Problem<f64>;
/// Single precision problem instance.
pub type Problem32 = stationarity::Problem<f32>;
/// Double precision tolerance set.
pub type Tolerances64 = stationarity::ToleranceSet<f64>;
pub type StationaryRecord64 = stationarity::StationaryRecord<f64>;
pub type RelaxationRecord64 = relaxation::RelaxationRecord<f64>;
pub type EnumerationResult64 = enumeration::EnumerationResult<f64>;
pub type MorseReport64 = globalmorse::MorseReport<f64>;
pub type LevelGrid64 = globalmorse::LevelGrid<f64>;
