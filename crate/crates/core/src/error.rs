use std::io;

use thiserror::Error;

/// Errors raised by transforms, solvers, samplers and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method failed to converge or a factorisation broke down.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The operation is not defined for this configuration (e.g. gradients of a stable prior).
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    /// Malformed binary or text input (IDX, CSV, cache files).
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
