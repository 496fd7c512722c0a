use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("eigenvalue spectrum of the {kind} projector is not bimodal: found {value}")]
    Spectrum { kind: &'static str, value: f64 },

    #[error("zero-norm reference stress in snapshot at t = {0}")]
    ZeroNormTarget(f64),

    #[error("non-finite loss {loss} at batch {batch}")]
    NonFiniteLoss { loss: f64, batch: usize },

    #[error("corrupt or unsupported file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("self-test failed: {0}")]
    SelfTest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
