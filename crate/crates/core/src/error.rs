use thiserror::Error;

/// Errors raised by the integrators, models and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not skew-symmetric (defect {defect:e})")]
    NotSkew { defect: f64 },

    #[error("matrix is not a rotation (orthogonality defect {orthogonality:e}, det {det})")]
    NotRotation { orthogonality: f64, det: f64 },

    #[error("rotation is too close to a half turn for the inverse Cayley map (det(R + I) = {det:e})")]
    SingularRetraction { det: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("step size violates the contraction bound: guard quantity {quantity} > 0.5")]
    StepSize { quantity: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("Euler angles are degenerate: {0}")]
    Degenerate(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
