use thiserror::Error;

use crate::corpus::CorpusError;
use crate::embeddings::EmbeddingError;
use crate::eval::EvalError;
use crate::graph::{HierarchyError, IngestError};
use crate::typing::TypingError;

/// Broad failure class, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration values.
    Usage,
    /// Missing, unreadable or malformed input.
    Data,
    /// NaN, infinity or divergence during training.
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Typing(#[from] TypingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::Corpus(CorpusError::InvalidMinCount)
            | Error::Embedding(EmbeddingError::InvalidConfig(_))
            | Error::Typing(TypingError::InvalidConfig(_))
            | Error::Eval(EvalError::InvalidRequest(_) | EvalError::UnknownMetric(_)) => ErrorKind::Usage,
            Error::Embedding(e) if e.is_numerical() => ErrorKind::Numerical,
            Error::Typing(e) if e.is_numerical() => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}
