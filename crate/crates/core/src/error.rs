use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by problems, optimizers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was not met by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("component index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An oracle returned NaN or infinity.
    #[error("non-finite value from component {index} at x = {point:?}")]
    NonFinite { index: usize, point: Vec<f64> },

    #[error("non-finite loss at x = {point:?}")]
    NonFiniteLoss { point: Vec<f64> },

    /// The iterate left the finite range (or exceeded the divergence threshold).
    #[error("divergence at epoch {epoch}, inner step {step}, gamma = {gamma:e}")]
    Divergence { epoch: usize, step: usize, gamma: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A located LIBSVM/CSV parse failure. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
