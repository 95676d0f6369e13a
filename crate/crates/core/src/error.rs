use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A parse or validation failure inside a named input file.
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    /// A single malformed input row. `line` is 1-based.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node {node} ({external}) is isolated; prune the graph before diffusion")]
    IsolatedNode { node: u32, external: String },

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("stage `{stage}`: {message}")]
    Stage { stage: String, message: String },
}

impl Error {
    pub fn row(line: u64, message: impl Into<String>) -> Self {
        Error::Row {
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
