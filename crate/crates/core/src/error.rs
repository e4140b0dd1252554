use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// G₁ or Ĝ₁ is not positive definite at the requested multiplier.
    #[error("dual variable too small: stationarity system is singular at varrho = {0}")]
    DualTooSmall(f64),

    #[error("ZF infeasible: stacked effective channel is rank deficient")]
    ZfInfeasible,

    #[error("empty elite set")]
    EmptyElite,

    #[error("conventional RIS split needs an even element count, got M = {0}")]
    OddElementCount(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
