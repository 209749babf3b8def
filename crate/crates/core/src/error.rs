use std::path::PathBuf;

use thiserror::Error;

use crate::pde::A1Infeasible;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or invalid parameters supplied by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// A point lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of a checker does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Infeasible(#[from] A1Infeasible),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
