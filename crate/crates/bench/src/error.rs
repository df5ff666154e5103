use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ppm_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 2 for usage errors, 1 otherwise. Certificate
    /// failures are not errors and exit with 3 from the front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}
