use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular: {null_modes} zero pivot(s), first at row {first_pivot}")]
    Singular { null_modes: usize, first_pivot: usize },
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
}
