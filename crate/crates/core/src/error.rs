use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its declared range or shape.
    #[error("invalid config `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Transmission rate evaluated to zero, so offloading would never finish.
    #[error("transmission rate is zero (transmit power {power} W, gain {gain})")]
    ZeroRate { power: f64, gain: f64 },

    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: String, reason: String },

    #[error("no legal action in this state")]
    NoLegalAction,

    #[error("state space too large to enumerate: {entries} state-action entries (limit {limit})")]
    TooLarge { entries: usize, limit: usize },

    /// The oracle needs every local execution to consume a whole number of resource bins.
    #[error("resource budget is not bin-aligned: {0}")]
    NotBinAligned(String),

    #[error("q-table dimension mismatch: expected {expected_states}x{expected_actions}, got {states}x{actions}")]
    DimensionMismatch {
        expected_states: usize,
        expected_actions: usize,
        states: usize,
        actions: usize,
    },

    #[error("q-table artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
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
