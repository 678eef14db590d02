//! Crate-wide error type.
//!
//! All fallible operations in this crate return [`Error`]. Guard violations
//! (instance sizes that would exceed the documented enumeration or memory
//! limits) are reported as [`Error::GuardExceeded`] rather than silently
//! attempted.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    /// A matrix that must be square is not.
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    /// A kernel matrix that must be invertible over GF(2) is singular.
    #[error("matrix is singular over GF(2)")]
    Singular,

    /// An enumeration or memory guard would be exceeded.
    #[error("{what} would require {needed} states (limit {limit})")]
    GuardExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    /// Mismatched dimensions between related arguments.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A channel definition is not a valid pair of conditional pmfs.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A textual input (matrix, channel spec, profile) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A kernel name that is not in the built-in registry.
    #[error("unknown kernel: {0}")]
    UnknownKernel(String),

    /// A code specification failed validation.
    #[error("invalid code spec: {0}")]
    InvalidSpec(String),

    /// An I/O failure while reading or writing files.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A JSON (de)serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
