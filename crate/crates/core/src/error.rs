use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caller broke an operation's precondition (arity, lengths, empty inputs).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value at step {step}, node {node}")]
    NonFinite { step: usize, node: u64 },

    #[error("training failed: {0}")]
    TrainingFailure(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
