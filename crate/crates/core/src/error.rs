use std::path::PathBuf;

use nalgebra::DVector;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller-supplied data violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Newton iteration hit its budget. The last iterate is kept for inspection.
    #[error("Laplace mode search did not converge after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    Convergence {
        iterations: usize,
        grad_norm: f64,
        last: DVector<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input is well formed but carries no usable signal (for example an all-zero comparison matrix).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Every hyperparameter candidate failed to fit.
    #[error("all {} grid points failed; first failure: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    AllFailed(Vec<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
