use thiserror::Error;

/// Error type shared by all core modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numerical failure at iteration {iter}: {msg}")]
    Numerical { iter: usize, msg: String },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
