use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: non-finite loss")]
    Training { epoch: usize, batch: usize },

    #[error("gradient check failed: {parameter} has relative error {error:e} (tolerance {tolerance:e})")]
    GradientCheck {
        parameter: String,
        error: f64,
        tolerance: f64,
    },

    #[error("embedding ids do not match manifest: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    IdMismatch { missing: Vec<String>, extra: Vec<String> },

    #[error("missing manifest: {}", .0.display())]
    MissingManifest(PathBuf),

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
