use thiserror::Error;

use crate::psd_project::PsdProjectionResult;

pub type Result<T> = std::result::Result<T, CocaError>;

#[derive(Debug, Error)]
pub enum CocaError {
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Column `0` has zero variance (or zero rank variance).
    #[error("column {0} is constant")]
    DegenerateColumn(usize),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid radius: {0}")]
    InvalidRadius(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Power-type iterate fell into the null space of the matrix.
    #[error("iterate collapsed to the zero vector at iteration {0}")]
    DegenerateIterate(usize),

    /// Elastic-net step shrank every coordinate to zero; lower the l1 penalty.
    #[error("elastic-net step returned the zero vector (l1 penalty {0} too large)")]
    AllZeroSolution(f64),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("numerical error: {0}")]
    NumericalError(String),

    /// Bisection ran out of steps; carries the best feasible iterate found.
    #[error("projection did not converge: bracket width {width:.3e} after {iterations} steps")]
    NotConverged {
        width: f64,
        iterations: usize,
        best: Box<PsdProjectionResult>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CocaError {
    /// Stable variant name, used in structured CLI error output.
    pub fn name(&self) -> &'static str {
        match self {
            CocaError::InvalidData(_) => "InvalidData",
            CocaError::DegenerateColumn(_) => "DegenerateColumn",
            CocaError::InvalidDimension(_) => "InvalidDimension",
            CocaError::InvalidRadius(_) => "InvalidRadius",
            CocaError::InvalidVector(_) => "InvalidVector",
            CocaError::InvalidInput(_) => "InvalidInput",
            CocaError::DegenerateIterate(_) => "DegenerateIterate",
            CocaError::AllZeroSolution(_) => "AllZeroSolution",
            CocaError::NotPsd(_) => "NotPsd",
            CocaError::NumericalError(_) => "NumericalError",
            CocaError::NotConverged { .. } => "NotConverged",
            CocaError::Config(_) => "Config",
            CocaError::Io(_) => "Io",
            CocaError::Csv(_) => "Csv",
            CocaError::Json(_) => "Json",
        }
    }
}
