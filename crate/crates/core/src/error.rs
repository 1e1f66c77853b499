use thiserror::Error;

/// Errors raised by the field-construction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent or unsupported configuration (grid sizes, dimensions).
    #[error("configuration error: {0}")]
    Config(String),
    /// The sampled spectrum of the truncated kernel has significantly negative values.
    #[error("spectrum not positive: min {min:e} below -{tol:e} * max {max:e}")]
    NotPositive { min: f64, max: f64, tol: f64 },
    /// Bracketing for the minimal torus half-width ran past its limit.
    #[error("no positive spectrum up to gamma = {upper} (kernel or cutoff likely inadmissible)")]
    GammaSearch { upper: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
