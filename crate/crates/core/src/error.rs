use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("hessian is not positive definite at {point:?} (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eig: f64 },

    #[error("root bracket not found along direction {direction:?} after {expansions} expansions")]
    Bracket { direction: Vec<f64>, expansions: usize },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("quadrature did not reach tolerance: estimate {estimate:e} > {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("extrapolation did not settle: successive estimates differ by {0:e}")]
    Extrapolation(f64),

    #[error("too few nodes: found {found}, need {required}")]
    InsufficientNodes { found: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
