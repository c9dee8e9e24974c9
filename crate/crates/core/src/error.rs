use std::path::PathBuf;

use thiserror::Error;

use crate::generators::RequestKind;

pub type Result<T, E = LarkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LarkError {
    /// A structured document could not be parsed, or a required field is absent.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// The provider failed after all retries were exhausted.
    #[error("provider failure during {kind} request: {message}")]
    Provider { kind: RequestKind, message: String },

    #[error("i/o error on {path}: {source}")]
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

impl LarkError {
    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        LarkError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        LarkError::Validation(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LarkError::Io {
            path: path.into(),
            source,
        }
    }
}
