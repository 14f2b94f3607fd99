use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("attribute {attr} out of range for k={k}")]
    AttributeOutOfRange { attr: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("query mentions {found} variables, bound is {bound}")]
    VariableBound { found: usize, bound: usize },

    #[error("degenerate constraint {index}: S={sum}")]
    DegenerateConstraint { index: usize, sum: f64 },

    #[error("clique {clique}: {source}")]
    Clique {
        clique: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("query {id} has zero exact count")]
    ZeroExactCount { id: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
