use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root bracket could not be established.
    #[error("bracket not found: {0}")]
    Bracket(String),

    /// A caller-side precondition failed; `index` names the offending fiber when there is one.
    #[error("precondition violated{}: {message}", index.map(|i| format!(" at fiber {i}")).unwrap_or_default())]
    Precondition { index: Option<usize>, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn fiber(index: usize, msg: impl Into<String>) -> Self {
        Error::Precondition {
            index: Some(index),
            message: msg.into(),
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition {
            index: None,
            message: msg.into(),
        }
    }
}
