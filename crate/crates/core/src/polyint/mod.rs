//! Sparse multivariate polynomials and the interpolation machinery built on
//! them: univariate Newton with early termination, the staged sparse
//! (Zippel-style) interpolator, a dense recursive reference interpolator,
//! and the shifted transposed Vandermonde solver.

mod dense;
mod newton;
mod poly;
mod vandermonde;
mod zippel;

pub use dense::dense_newton_interpolate;
pub use newton::NewtonState;
pub use poly::{Coeff, MultiIndex, SparsePolynomial};
pub use vandermonde::{monomial_evals, solve_shifted_vandermonde};
pub use zippel::{zippel_interpolate, ZippelOptions, ZippelState};

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    /// Coincident interpolation points make a divided difference undefined;
    /// the caller should supply fresh points.
    #[error("coincident interpolation points")]
    CoincidentPoints,
    /// Two monomials evaluate identically at the anchors; retry with new
    /// anchor values.
    #[error("singular Vandermonde system, retry with fresh anchors")]
    SingularVandermonde,
    #[error("fed a value to a finished interpolation")]
    AlreadyDone,
}

/// Lower bound on the success probability of early-terminated Newton
/// interpolation: 1 - (D+1)(D/p)^eta.
pub fn newton_success_bound(degree: u64, eta: u32, p: u64) -> BigRational {
    let ratio = BigRational::new(BigInt::from(degree), BigInt::from(p));
    let pow = num_traits::pow::pow(ratio, eta as usize);
    BigRational::from(BigInt::from(1)) - BigRational::from(BigInt::from(degree + 1)) * pow
}

/// Upper bound on the failure probability of the sparse staged interpolation
/// with uniformly random anchors: n D^2 T^2 / p. May exceed 1 (vacuous).
pub fn zippel_failure_bound(n: u64, degree: u64, terms: u64, p: u64) -> BigRational {
    BigRational::new(
        BigInt::from(n) * BigInt::from(degree * degree) * BigInt::from(terms * terms),
        BigInt::from(p),
    )
}
