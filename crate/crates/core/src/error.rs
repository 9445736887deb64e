//! Shared error type for the core crate.

/// Errors surfaced by the numeric kernels, the model, and the calibration loop.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Incompatible shapes or dimensions.
    #[error("shape error: {0}")]
    Shape(String),

    /// A numeric procedure failed (factorization, overflow, non-finite values).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The calibration loss became non-finite; carries the iteration index.
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    /// Statistically degenerate input (e.g. a constant vector where variance
    /// is required).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A node was used with a computation graph it does not belong to.
    #[error("graph error: {0}")]
    Graph(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
