use thiserror::Error;

use crate::crm::StageId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid config `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("event `{event}` is not valid in stage {stage:?}")]
    InvalidEvent { stage: StageId, event: &'static str },

    #[error("stage {0:?} is terminal and admits no further transitions")]
    TerminalStage(StageId),

    #[error("invalid task: {0}")]
    Task(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
