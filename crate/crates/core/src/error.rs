use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stream is empty")]
    EmptyStream,

    #[error("line {line}: malformed entry `{token}`")]
    Parse { line: usize, token: String },

    #[error("mechanism horizon {horizon} exhausted")]
    PastHorizon { horizon: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("streams are not item-neighbors: positions {first} and {second} touch different elements")]
    NotItemNeighbors { first: usize, second: usize },

    #[error("stream must be insertion-only, found a deletion at t = {t}")]
    NotInsertionOnly { t: usize },

    #[error("dataset has {rows} rows but query {query} has length {len}")]
    DimensionMismatch { rows: usize, query: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
