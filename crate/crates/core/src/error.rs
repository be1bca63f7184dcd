//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no constrained segments found")]
    NoSegments,
    #[error("projection onto constraint failed (residual {residual:.3e})")]
    ProjectionFailed { residual: f64 },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("no models to select from")]
    NoModels,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
