use thiserror::Error;

/// Errors raised by operator construction, certificate verification, the
/// solver and the protocol simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mixed scalar modes: cannot combine exact and float operands")]
    ModeMismatch,

    #[error("exact arithmetic required, got float entries")]
    ExactModeRequired,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor factorizations differ")]
    FactorizationMismatch,

    #[error("matrix is not Hermitian at entry ({row}, {col})")]
    NotHermitian { row: usize, col: usize },

    #[error("total dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("factor selector references nonexistent factor {0}")]
    InvalidFactor(usize),

    #[error("partial trace would remove every factor; use trace() instead")]
    TraceOutEverything,

    #[error("factorization is not in interleaved (A, B, A, B, ...) form")]
    NotInterleaved,

    #[error("unbalanced cut: dim_A = {dim_a}, dim_B = {dim_b}")]
    UnbalancedCut { dim_a: usize, dim_b: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
