//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value or shape handed to an operation violates its preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was called in a state that does not admit it
    /// (e.g. eviction with no eligible position, wrong phase).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An architecture or workload configuration is internally inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A numeric operation left its mathematical domain (e.g. normalizing
    /// against a zero exponent sum).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Malformed serialized data (trace files, config files).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invalid_state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
