use thiserror::Error;

/// Errors raised by the factorization kernels, the drivers and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A Cholesky pivot was zero, negative or NaN.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("triangular factor has a zero diagonal entry at {index}")]
    SingularTriangular { index: usize },

    #[error("column {column} has zero norm")]
    RankDeficient { column: usize },

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("matrix has zero norm")]
    ZeroMatrix,

    /// The Krylov recurrence produced a zero column.
    #[error("Krylov basis breakdown at column {column}")]
    Breakdown { column: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
