//! Error types shared by all solvers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (size mismatch, non-finite entries,
    /// invalid parameter value).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative routine produced non-finite values or failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The data carries no usable signal for the requested operation
    /// (constant variables, identical samples, zero objective).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A matrix required to be positive semi-definite has a significantly
    /// negative eigenvalue.
    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),

    /// Every point of a tuning grid failed to produce a usable fit.
    #[error("degenerate tuning grid: {0}")]
    DegenerateGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
