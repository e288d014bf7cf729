use thiserror::Error;

/// Errors raised by the numerical routines and scenario runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite matrix entries")]
    NonFinite,

    #[error("operator is not invertible: density matrix has a kernel (min eigenvalue {min_eigenvalue:e})")]
    NotInvertible { min_eigenvalue: f64 },

    #[error("constraint system unsatisfiable: residual {residual:e} exceeds {tolerance:e}")]
    ConstraintUnsatisfiable { residual: f64, tolerance: f64 },

    #[error("positivity lost at t = {time}: clipped eigenvalue mass {clipped:e} exceeds {tolerance:e}")]
    PositivityLoss {
        time: f64,
        clipped: f64,
        tolerance: f64,
    },

    #[error("Bloch matrix inconsistent: B00 = {found}, expected {expected}")]
    InconsistentBloch { found: f64, expected: f64 },

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConverged { iterations: usize, grad_norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal contract violation: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
