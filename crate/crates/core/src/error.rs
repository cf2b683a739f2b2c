use thiserror::Error;

/// Errors raised by the numerical kernels, the geometry and the problems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("part {part} is not symmetric (residual {residual:e})")]
    NotSymmetric { part: usize, residual: f64 },

    #[error("{} is not positive definite (smallest eigenvalue {min_eig:e})", describe_part(*.part))]
    NotPositiveDefinite { part: Option<usize>, min_eig: f64 },

    #[error("parts do not sum to the identity (residual {residual:e})")]
    SumConstraintViolated { residual: f64 },

    #[error("parts of the tangent vector do not sum to zero (residual {residual:e})")]
    NotTangent { residual: f64 },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    IllConditioned { iterations: usize, residual: f64 },

    #[error("retraction step too large (exponent spectral norm {norm:e} exceeds cap {cap:e})")]
    Overflow { norm: f64, cap: f64 },

    #[error("oracle solution touches the boundary (entry {value:e} at index {index})")]
    BoundaryHit { index: usize, value: f64 },

    #[error("direction is not a descent direction (slope {slope:e})")]
    NotDescent { slope: f64 },

    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFail { backtracks: usize },
}

fn describe_part(part: Option<usize>) -> String {
    match part {
        Some(i) => format!("part {i}"),
        None => "matrix".to_string(),
    }
}

impl Error {
    /// Short stable name used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::SumConstraintViolated { .. } => "SumConstraintViolated",
            Error::NotTangent { .. } => "NotTangent",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::Overflow { .. } => "Overflow",
            Error::BoundaryHit { .. } => "BoundaryHit",
            Error::NotDescent { .. } => "NotDescent",
            Error::LineSearchFail { .. } => "LineSearchFail",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
