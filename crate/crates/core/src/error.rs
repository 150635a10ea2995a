use thiserror::Error;

/// Errors shared across the analysis and simulation modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// Structurally invalid parameters (dimensions, ranges, missing fields).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A partial sum or intermediate product left the finite range.
    #[error("numeric overflow after {last_stable_index} stable terms")]
    NumericOverflow { last_stable_index: usize },

    /// Result computed but cancellation makes it numerically suspect.
    /// `dynamic_range` is max intermediate term magnitude over |result|.
    #[error("numerically unstable result {value:e} (dynamic range {dynamic_range:.2e})")]
    Unstable { value: f64, dynamic_range: f64 },

    /// Adaptive quadrature hit its subdivision limit before the tolerance.
    #[error("quadrature did not converge to tolerance {tol:e}")]
    QuadratureNonConvergence { tol: f64 },

    /// A matrix expected to be positive (semi)definite failed factorization.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    /// A matrix required to be invertible is singular to working precision.
    #[error("singular matrix: {0}")]
    SingularMatrix(&'static str),

    /// The closed-form law requested does not apply to this scenario.
    #[error("exact law unavailable: residual mean norm {mu_norm:e} exceeds tolerance {tol:e}")]
    ExactLawUnavailable { mu_norm: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
