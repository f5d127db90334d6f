use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("evaluation at a pole: z = {0}")]
    Pole(Complex64),
    #[error("schedule invariant violated at n = {n}: {bullet}")]
    Schedule { n: usize, bullet: String },
    #[error("fit failed at n = {n}: achieved {achieved:e}, requested {tol:e}")]
    Fit { n: usize, achieved: f64, tol: f64 },
    #[error("{0}")]
    Diagnostic(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
