use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("integration dimension {dim} exceeds the limit {limit} of the selected scheme")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("integrand returned NaN")]
    NaN,
    #[error("quadrature did not converge: error estimate {estimate:.3e} above tolerance {tolerance:.3e}")]
    NonConvergence { estimate: f64, tolerance: f64 },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
