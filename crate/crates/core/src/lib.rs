//! Quantile-interacting particle systems and their mean-field limit.
//!
//! `n` particles move right on the real line in random jumps. Every particle
//! receives jump urges at unit rate and acts on an urge with a probability
//! that decreases with its rank among all particles. This crate provides
//!
//! * an exact event-driven simulator of the finite system ([`particle`]),
//! * a grid solver for the deterministic mean-field model ([`mfm`]),
//! * the traveling-wave shape of that model ([`tws`]),
//! * distances, moments and stationary estimators ([`metrics`]),
//! * a config-driven experiment runner ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod harness;
pub mod metrics;
pub mod mfm;
pub mod particle;
pub mod rng;
pub mod tws;

pub use distributions::{JumpLaw, JumpSpec, ProfileSpec, RateProfile};
pub use harness::{run_experiment, ExperimentConfig, RunReport};
pub use mfm::{GridCdf, MfmSolverParams};
pub use particle::{CenteredState, ParticleState, UrgeEvent};
pub use tws::TravelingWave;
