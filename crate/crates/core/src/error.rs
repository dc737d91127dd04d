use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arity: {0}")]
    InvalidArity(String),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("malformed edge {0:?}")]
    MalformedEdge(Vec<usize>),
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(Vec<usize>),
    #[error("divisibility: {0}")]
    Divisibility(String),
    #[error("budget exhausted in {what}; partial result: {partial}")]
    Resource { what: String, partial: String },
    /// A solver stage found nothing to work with.
    #[error("{phase} phase failed: {detail}")]
    Phase { phase: &'static str, detail: String },
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
