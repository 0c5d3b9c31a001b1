//! Crate-wide error type and result alias.

use std::path::PathBuf;
use thiserror::Error;

/// Result type for all fallible toolkit operations.
pub type Result<T> = std::result::Result<T, Error>;

/// Error raised by dataset, feature, training, calibration, or evaluation code.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid filename {name:?}: {reason}")]
    Filename { name: String, reason: String },

    #[error("wav format error in {path}: {field}: {detail}")]
    WavFormat {
        path: PathBuf,
        field: &'static str,
        detail: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("dataset integrity: {0}")]
    Integrity(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("incomplete report, missing: {}", .0.join(", "))]
    MissingMetrics(Vec<String>),

    #[error("submission mismatch: {0}")]
    Reconciliation(String),

    #[error("parse error at {path}:{line}: {detail}")]
    CsvParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for input/config problems,
    /// 3 for data-integrity problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Integrity(_)
            | Error::Reconciliation(_)
            | Error::MissingMetrics(_)
            | Error::Degenerate(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
