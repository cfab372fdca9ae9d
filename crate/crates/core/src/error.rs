use thiserror::Error;

/// Errors raised by the lattice, solver and analysis layers.
#[derive(Debug, Error)]
pub enum MaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible normalization: shifted right-hand side reaches {min} <= 0")]
    InfeasibleNormalization { min: f64 },

    #[error("infeasible problem: relative compatibility defect {defect:.3e} exceeds {limit:.3e}")]
    Infeasible { defect: f64, limit: f64 },

    #[error("Newton did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        best_residual: f64,
        /// Best iterate seen, in solver unknown ordering.
        best_iterate: Vec<f64>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant gate failed: {0}")]
    Gate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MaError::InvalidArgument(msg.into()))
}
