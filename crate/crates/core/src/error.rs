//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum MagnusError {
    /// An input failed validation (non-Hermitian operator, bad parameter
    /// range, malformed pulse file, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// Operator or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A bracket left the generated basis: the requested expansion order
    /// needs a deeper Lie closure than was generated.
    #[error("Lie closure: {0}")]
    Closure(String),

    /// A hard resource guard was hit (tree order, segment cap, model size).
    #[error("limit: {0}")]
    Limit(String),

    /// Accumulated coefficients picked up an imaginary part: the Hermitian
    /// bracket bookkeeping was violated somewhere upstream.
    #[error("convention: {0}")]
    Convention(String),

    /// An iterative numeric scheme failed to converge to its tolerance.
    #[error("numeric: {0}")]
    Numeric(String),

    /// Artifact or pulse file I/O and format problems.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Artifact corrupt, wrong version, or digest mismatch.
    #[error("artifact: {0}")]
    Artifact(String),
}

pub type Result<T> = std::result::Result<T, MagnusError>;
