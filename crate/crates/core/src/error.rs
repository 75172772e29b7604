use thiserror::Error;

use crate::milp::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid geometry: distance {0} m must be positive")]
    InvalidGeometry(f64),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("solver returned status {0:?}")]
    Solver(SolveStatus),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
