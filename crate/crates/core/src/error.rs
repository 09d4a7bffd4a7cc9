use thiserror::Error;

/// Failures of the numeric kernels (quadrature, series).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "quadrature on [{lower}, {upper}] did not reach tolerance: estimate {estimate:e}, \
         error {error:e} after {subdivisions} subdivisions"
    )]
    Convergence {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },
    #[error("hypergeometric series did not converge after {terms} terms")]
    SeriesDivergence { terms: usize },
    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

/// Errors raised by the simulator and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("insufficient samples: got {got}, at least {need} required")]
    InsufficientSamples { got: usize, need: usize },
    #[error(
        "rejection budget of {budget} draws exhausted placing the user of base station {bs} \
         (cell bounding radius {radius:.4})"
    )]
    RejectionBudget {
        bs: usize,
        budget: usize,
        radius: f64,
    },
    #[error("degenerate sample: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
