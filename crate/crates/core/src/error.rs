use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the scheduling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no samples in estimation window")]
    NoData,

    #[error("degenerate input: every path has zero mean and zero variability")]
    Degenerate,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("receive buffer size undefined: path {0} has zero mean delay")]
    UndefinedBufferSize(usize),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
