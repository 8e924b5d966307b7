//! The finite particle system: exact simulation, re-centering and drift
//! diagnostics.

mod drift;
mod sim;
mod state;
mod stationary;
mod store;

pub use drift::{
    enumerate_urge_outcome, lyapunov_g, sample_urge_increments, v_n, zeta_bar, IncrementEstimate, ENUMERATION_LIMIT,
};
pub use sim::{advance, draw_urge, next_event_time, run, step, Observer, RunSummary, Urge, UrgeEvent};
pub use state::{CenteredState, ParticleState};
pub use stationary::{default_burn_in, stationary_sample, StationaryConfig, StationaryDiagnostics, StationarySample};
pub use store::{SortedPositions, Storage, CHUNKED_THRESHOLD};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticleError {
    #[error("a particle system needs at least one particle")]
    EmptySystem,
    #[error("position {index} is not finite")]
    NonFinite { index: usize },
    #[error("clock {0} is not a finite non-negative time")]
    InvalidClock(f64),
    #[error("exact enumeration over {n} particles exceeds the limit of {limit}")]
    EnumerationTooLarge { n: usize, limit: usize },
    #[error("invalid stationary sampling setup: {0}")]
    InvalidSampling(String),
}
