use std::io;

use crate::corpus::Pmid;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A line of an input stream could not be parsed.
    #[error("line {line}{}: {message}", .pmid.map(|p| format!(" (pmid {p})")).unwrap_or_default())]
    Parse { line: usize, pmid: Option<Pmid>, message: String },

    #[error("unknown concept type {0:?}")]
    UnknownConceptType(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, pmid: Option<Pmid>, message: impl Into<String>) -> Self {
        Error::Parse { line, pmid, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
