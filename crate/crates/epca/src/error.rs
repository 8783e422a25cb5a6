use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need at least 2 samples, got {n}")]
    InsufficientSamples { n: usize },

    #[error("rank {d} out of range (max feasible {max})")]
    InvalidRank { d: usize, max: usize },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("bag size {n} out of range (need 2 <= n <= {max})")]
    InvalidBagSize { n: usize, max: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at row {row}, column {col}: {value:?}")]
    Parse {
        row: usize,
        col: usize,
        value: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
