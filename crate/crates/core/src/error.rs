use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("quadrature did not converge (defect {defect:e})")]
    QuadratureNotConverged { defect: f64 },

    #[error("invalid parameter {field}: {rule}")]
    InvalidParameter { field: &'static str, rule: String },

    #[error("operator assembly failed: {0}")]
    Assembly(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("Picard iteration did not converge (residual history {residual_history:?})")]
    PicardDiverged { residual_history: Vec<f64> },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, rule: &str) -> Self {
        Error::InvalidParameter {
            field,
            rule: String::from(rule),
        }
    }
}
