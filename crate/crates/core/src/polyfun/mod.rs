//! Exact multivariate polynomials, their derivatives, axis restrictions and
//! global minimization of univariate restrictions.

mod multivariate;
mod parse;
mod univariate;

pub use multivariate::{Monomial, Polynomial, PolynomialRecord, TermRecord};
pub use parse::parse_polynomial;
pub use univariate::{
    global_min_univariate, global_min_univariate_with, real_roots, RootApprox,
    UnivariateMin, UnivariatePolynomial, DEFAULT_ROOT_PRECISION,
};
