//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library. Per-cluster failures in the pipeline are
/// captured and logged rather than aborting a run; hard errors (configuration,
/// I/O) propagate to the caller.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evolutionary engine reached a numerically unusable state
    /// (non-finite parameters, non-positive-definite covariance).
    #[error("degenerate engine state: {0}")]
    DegenerateEngine(String),

    /// Input geometry does not support the requested construction
    /// (too few points, affinely dependent sites).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A projection system could not be factored.
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    /// A linear system stayed numerically singular after all regularisation
    /// fallbacks.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
