//! Golden-mean renormalization toolkit for skew-product maps over circle rotations.

pub mod analytic;
pub mod cocycle;
pub mod config;
pub mod curves;
pub mod golden;
pub mod limit;
pub mod rg;
pub mod scalar;
pub mod suite;
pub mod zeros;

pub use golden::GoldenNumber;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("noninvertible factor")]
    NonInvertible,
    #[error("argument disk escapes domain")]
    DiskEscape,
    #[error("sigma normalization failed")]
    SigmaFailed,
    #[error("period not found")]
    PeriodNotFound,
    #[error("monotonicity failed")]
    Monotonicity,
    #[error("no crossing in bracket")]
    NoCrossing,
    #[error("zero vector encountered")]
    ZeroVector,
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
