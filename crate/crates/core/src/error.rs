use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("state index {index} out of range for state space of size {cardinality}")]
    IndexOutOfRange { index: u64, cardinality: u64 },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid action `{action}`: {reason}")]
    InvalidAction { action: String, reason: String },

    #[error("action {action} is not applicable in state {state}")]
    InapplicableAction { action: String, state: u64 },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("unsupported {kind} version {found} (expected {expected})")]
    Version {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("malformed {kind}: {reason}")]
    Malformed { kind: &'static str, reason: String },

    #[error("config error in {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("empty sample")]
    EmptySample,

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(path: impl ToString, reason: impl ToString) -> Self {
        Error::Config {
            path: PathBuf::from(path.to_string()),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn malformed(kind: &'static str, reason: impl ToString) -> Self {
        Error::Malformed {
            kind,
            reason: reason.to_string(),
        }
    }
}
