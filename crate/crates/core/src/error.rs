use thiserror::Error;

use crate::grid::GridKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operation requires a {expected} grid, got {found}")]
    GridKind { expected: &'static str, found: GridKind },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("expected {expected} samples, got {found}")]
    Length { expected: usize, found: usize },

    #[error("non-finite sample {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error(
        "profile does not decay toward the endpoints: |v(left)| = {left:e}, |v(right)| = {right:e}, \
         allowed {allowed:e}"
    )]
    DecayViolation { left: f64, right: f64, allowed: f64 },

    #[error("singular denominator at {} node(s), first {:?}, min value {min:e}", nodes.len(), nodes.first())]
    SingularDenominator { nodes: Vec<usize>, min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decay fit failed: {0}")]
    Fit(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
