//! Rational-function interpolation over a single prime field: Thiele's
//! continued fraction in the homogenization variable, variable shifts and
//! their analytic subtraction, univariate systems in t, and the staged
//! engine combining them with sparse polynomial interpolation.

mod engine;
mod system;
mod thiele;

pub use engine::{
    interpolate_rational, shift_scan, FirstPrimeOptions, FirstPrimeOutcome, ProbeOrder,
    RatInterpolator, Request,
};
pub(crate) use engine::draw_shift;
pub use system::{build_univariate_system, solve_linear};
pub use thiele::ThieleState;

use thiserror::Error;

use crate::ffield::FieldElement;
use crate::polyint::{Coeff, PolyError, SparsePolynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RatError {
    /// A vanishing denominator in the continued-fraction recursion; retry
    /// with different points or in a different field.
    #[error("unlucky zero in continued-fraction recursion")]
    UnluckyZero,
    /// The univariate system in t is singular; retry with fresh t values.
    #[error("singular univariate system")]
    SingularSystem,
    /// Neither numerator nor denominator has a constant term, so no unique
    /// normalization exists; a variable shift is required.
    #[error("no constant term available for normalization; shift required")]
    NoNormalization,
    /// Retry budget exhausted.
    #[error("retries exhausted: {0}")]
    RetriesExhausted(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    /// Values supplied for a request that was never issued.
    #[error("no probe request outstanding")]
    NoRequest,
}

/// A ratio of sparse polynomials. The canonical normalization divides both
/// sides by the coefficient of the denominator's lowest-degree monomial,
/// ties broken by smallest colexicographic multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<C: Coeff> {
    pub numerator: SparsePolynomial<C>,
    pub denominator: SparsePolynomial<C>,
}

impl<C: Coeff> RationalFunction<C> {
    pub fn new(numerator: SparsePolynomial<C>, denominator: SparsePolynomial<C>) -> Self {
        assert!(!denominator.is_zero(), "denominator must be non-empty");
        RationalFunction {
            numerator,
            denominator,
        }
    }

    /// Scales both polynomials so the denominator's normalization monomial
    /// has coefficient one. Idempotent.
    pub fn normalize(&self) -> Self {
        let (_, c) = self
            .denominator
            .terms
            .iter()
            .next()
            .expect("denominator is non-empty");
        let factor = c.inv();
        RationalFunction {
            numerator: self.numerator.scale(&factor),
            denominator: self.denominator.scale(&factor),
        }
    }

    /// Renders as `(<numerator>)/(<denominator>)`.
    pub fn render(&self, vars: &[String]) -> String {
        format!(
            "({})/({})",
            self.numerator.to_string_with(vars),
            self.denominator.to_string_with(vars)
        )
    }

    pub fn n_vars(&self) -> usize {
        self.numerator.n_vars
    }
}

impl RationalFunction<FieldElement> {
    /// Evaluates numerator over denominator; division by zero yields zero.
    pub fn evaluate(&self, point: &[FieldElement]) -> FieldElement {
        self.numerator.evaluate(point) / self.denominator.evaluate(point)
    }
}
