use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is outside the chart domain: {detail}")]
    OutOfDomain { what: &'static str, detail: String },
    #[error("{what} did not converge (residual {residual:.3e})")]
    NotConverged { what: &'static str, residual: f64 },
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("point is not on the variety: |G| = {0:.3e}")]
    OffVariety(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
