use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite coordinate at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("point outside domain at coordinate {index}: {value} not in [{lower}, {upper}]")]
    OutsideDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain must be bounded for {0}")]
    UnboundedDomain(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cost aggregate is empty")]
    EmptyAggregate,

    #[error("non-finite cost value at warm start")]
    NonFiniteCost,

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("instance lacks capability `{0}`")]
    MissingCapability(&'static str),

    #[error("missing constant `{0}` required by the requested bound")]
    MissingConstant(&'static str),

    #[error("invalid index window: {0}")]
    BadWindow(String),

    #[error("not enough usable points for a rate fit: {found} (need at least {needed})")]
    InsufficientPoints { found: usize, needed: usize },

    #[error("trace parse error at row {row}: {reason}")]
    TraceParse { row: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
