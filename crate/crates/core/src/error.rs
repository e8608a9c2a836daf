use thiserror::Error;

/// Errors produced by construction, numerics and serialization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("requires full observation")]
    RequiresFullObservation,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A vertex does not satisfy the interiority precondition for stable
    /// anchor selection; callers fall back to nearest-anchor edges.
    #[error("not interior: {0}")]
    NotInterior(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
