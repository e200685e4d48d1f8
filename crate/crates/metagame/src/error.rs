//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or coalition was sized for a different player count.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The request needs a full 2^d enumeration that is over the exact-engine
    /// limit. The sampling estimators in `approx` handle larger games.
    #[error("{d} players exceeds the exact-engine limit of {limit}; use the sampling approximators (approx) instead")]
    CapacityExceeded { d: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation needs a capability the inputs do not have, e.g. a
    /// gradient method on a bare game table with no differentiable model.
    #[error("unsupported capability: {0}")]
    Unsupported(String),

    /// An external attribution table has no value for the named coalition /
    /// target pair.
    #[error("external attribution table is missing coalition {coalition:#b} for target {target}")]
    MissingCoalition { coalition: u64, target: usize },

    /// A sampling estimator could not produce an estimate (degenerate or
    /// singular system); a larger budget usually fixes it.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
