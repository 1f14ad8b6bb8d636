use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint index {index} out of range (system has {n_fcns} functions)")]
    IndexOutOfRange { index: usize, n_fcns: usize },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid stratification: {0}")]
    InvalidStratification(String),

    #[error("degenerate configuration: equality-constraint gradients are linearly dependent")]
    Degenerate,

    #[error("boundary is unreachable from this point (zero tangential gradient)")]
    Unreachable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
