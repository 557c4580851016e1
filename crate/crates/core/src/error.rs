use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NotConverged { sweeps: usize, off_norm: f64 },

    /// The noise-reduced largest eigenvalue (or tail mass) vanished, so the
    /// requested quantity is undefined.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("first PC directions are numerically orthogonal (|inner| = {inner:e}); the direction statistic is unbounded")]
    OrthogonalDirections { inner: f64 },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
