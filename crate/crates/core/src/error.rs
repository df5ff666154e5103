use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid exponent p = {0}: must satisfy p >= 1")]
    InvalidExponent(f64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative of order {requested} requested, problem provides up to {available}")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("inner solver did not converge after {iterations} iterations (residual ratio {residual_ratio:.3e})")]
    InnerSolver { iterations: usize, residual_ratio: f64 },

    #[error("oracle failure at iteration {k}: {reason}")]
    Oracle { k: usize, reason: String },

    #[error("hard instance: {0}")]
    HardInstance(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
