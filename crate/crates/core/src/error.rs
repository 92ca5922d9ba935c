//! Error type shared by the exact engine, the loaders and the oracle.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange { what: &'static str, index: usize, bound: usize },

    #[error("operator O_{order} with degree shift {shift:+} is not available")]
    UnavailableOperator { order: usize, shift: i32 },

    #[error("invalid curvature data: {0}")]
    InvalidData(String),

    #[error("symmetry violations: {}", .0.join("; "))]
    Symmetry(Vec<String>),

    #[error("unsupported schema version {0}")]
    Schema(u32),

    #[error("lambda-dependent entries where a lambda-free map is required")]
    LambdaDependent,

    #[error("state carries parameter powers where a parameter-free state is required")]
    ParameterDependent,

    #[error("fiber shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("k = {k} exceeds j = {j}")]
    ConstantRange { j: usize, k: usize },

    #[error("numeric oracle: {0}")]
    Numeric(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
