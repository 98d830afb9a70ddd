use thiserror::Error;

/// Errors raised by the numerical routines and the file readers.
#[derive(Debug, Error)]
pub enum LanovaError {
    #[error("degenerate mode: mode {mode} has {levels} level(s), at least 2 are required")]
    DegenerateMode { mode: usize, levels: usize },

    #[error("dimension mismatch: dims {dims:?} imply {expected} values, got {actual}")]
    DimensionMismatch {
        dims: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("expected a {expected}-way tensor, got {actual} modes")]
    WrongOrder { expected: usize, actual: usize },

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("degenerate objective: noise variance is zero")]
    DegenerateObjective,

    #[error("zero total variance: the heavy-tail statistic is undefined")]
    ZeroTotalVariance,

    #[error("normal-tails correction undefined for excess kurtosis {0}")]
    NormalTailsCorrection(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LanovaError> = std::result::Result<T, E>;
