use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("not a Liouvillian form: exactness residual {residual:e}")]
    NotLiouvillian { residual: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("step matrix is singular at h = {h}")]
    StepSingular { h: f64 },
}
