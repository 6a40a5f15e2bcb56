use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad sizes, names, or option values supplied by the caller.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Non-finite values, failed factorizations, diverging iterations.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("continuation failed: {0}")]
    Continuation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by the caller rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Argument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
