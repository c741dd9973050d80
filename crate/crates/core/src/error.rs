use thiserror::Error;

/// Unified error type for the whole library.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible shapes or lengths in a linear-algebra or network operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An iterative routine hit its iteration budget without converging.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A numerical quantity left the representable/finite range.
    #[error("numerical divergence: {0}")]
    Divergence(String),
    /// A linear solve met an (effectively) singular matrix.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// An information buffer failed its round-trip integrity check.
    #[error("corrupt buffer: {0}")]
    CorruptBuffer(String),
    /// Serialized bytes do not parse as the expected format.
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
