use std::io;

use thiserror::Error;

/// Errors raised by the clustering engine, oracles and certificates.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distance matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("distance ({i}, {j}) is negative or not finite: {value}")]
    InvalidDistance { i: usize, j: usize, value: f64 },

    #[error("diagonal entry ({i}, {i}) is nonzero: {value}")]
    NonZeroDiagonal { i: usize, value: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("partition enumeration over {n} points exceeds the guard n_max = {n_max}")]
    ResourceGuard { n: usize, n_max: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
