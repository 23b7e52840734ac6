use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution too low: {0}")]
    Resolution(String),

    #[error("stability violation at s = {re} + {im}i: {detail}")]
    StabilityViolation { re: f64, im: f64, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("CFL violation: cfl = {cfl:.3} exceeds 1; try dt <= {suggested_dt:.3e}")]
    Cfl { cfl: f64, suggested_dt: f64 },

    #[error("unknown perturbation family '{name}' (available: {available})")]
    UnknownFamily { name: String, available: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
