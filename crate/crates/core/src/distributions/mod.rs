//! The two model ingredients: the acceptance profile and the jump law.
//!
//! Both are immutable after construction and can be shared freely between
//! concurrently running replicas.

mod jump;
mod profile;

pub use jump::{JumpFamily, JumpLaw, JumpSpec};
pub use profile::{ProfileSpec, RateProfile};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("acceptance values are not strictly decreasing at index {index}")]
    NotStrictlyDecreasing { index: usize },
    #[error("acceptance profile must satisfy eta(0) = 1 and eta(1) = 0, got eta(0) = {at_zero}, eta(1) = {at_one}")]
    BoundaryViolation { at_zero: f64, at_one: f64 },
    #[error("quantile {0} lies outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("jump law puts mass {0} on zero")]
    AtomAtZero(f64),
    #[error("jump law has infinite mean")]
    InfiniteMean,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DistributionError>;
