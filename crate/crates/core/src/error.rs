use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the generators, estimators and experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its legal domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    /// Correlation or DFA requested on a series without variance.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// FIARCH composite volatility drifted away from unit mean.
    #[error("unstable volatility: running mean {mean:.4} left [0.5, 2] at step {step}")]
    Stability { mean: f64, step: usize },

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config field `{field}`: {reason}")]
    ConfigField { field: String, reason: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
