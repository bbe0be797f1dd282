use thiserror::Error;

use crate::field::Space;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field has {found}x{found} samples but the grid is {expected}x{expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected a field in {expected:?} space, found {found:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("fields live on different grids (n or box length differ)")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration failure at t = {t}, step {step}: {reason}")]
    IntegrationFailure { t: f64, step: u64, reason: String },

    #[error("config error at {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("checkpoint format error at byte {offset}: {msg}")]
    CheckpointFormat { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
