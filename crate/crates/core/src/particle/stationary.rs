//! Sampling the long-run law of the re-centered system.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{JumpLaw, RateProfile};
use crate::metrics::{absolute_moment, batch_means, wasserstein1, AtomicCdf, BatchEstimate};

use super::drift::{lyapunov_g, v_n};
use super::sim::run;
use super::{CenteredState, ParticleError, ParticleState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub n: usize,
    /// Time discarded before sampling; [`default_burn_in`] when absent.
    #[serde(default)]
    pub burn_in: Option<f64>,
    pub spacing: f64,
    pub samples: usize,
    pub chi: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub keep_snapshots: bool,
}

fn default_batches() -> usize {
    20
}

/// `10 sqrt(n) / (1 - v)`.
pub fn default_burn_in(n: usize, profile: &RateProfile) -> f64 {
    10.0 * (n as f64).sqrt() / (1.0 - profile.speed())
}

impl StationaryConfig {
    pub fn burn_in_time(&self, profile: &RateProfile) -> f64 {
        self.burn_in.unwrap_or_else(|| default_burn_in(self.n, profile))
    }

    pub fn validate(&self) -> Result<(), ParticleError> {
        let bad = |m: &str| Err(ParticleError::InvalidSampling(m.to_string()));
        if self.n == 0 {
            return Err(ParticleError::EmptySystem);
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad("spacing must be positive");
        }
        if matches!(self.burn_in, Some(b) if !(b >= 0.0 && b.is_finite())) {
            return bad("burn-in must be a non-negative time");
        }
        if !(self.chi > 0.0) {
            return bad("chi must be positive");
        }
        if self.batches < 2 || self.samples < 2 * self.batches {
            return bad("need at least two batches of two samples");
        }
        Ok(())
    }
}

/// Functionals of one re-centered snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryDiagnostics {
    pub t: f64,
    pub phi_1: f64,
    pub phi_1pchi: f64,
    pub g: f64,
    pub w1_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySample {
    pub burn_in: f64,
    pub v_n: f64,
    pub diagnostics: Vec<StationaryDiagnostics>,
    /// Empty unless `keep_snapshots` was set.
    pub snapshots: Vec<CenteredState>,
    pub phi_1pchi: BatchEstimate,
    pub w1_ref: Option<BatchEstimate>,
    /// Largest `G` seen over all snapshots.
    pub max_g: f64,
}

/// Runs the system from `initial` through the burn-in and then records
/// `samples` re-centered snapshots `spacing` apart, with batch-means error
/// bars for `Phi_(1+chi)` and, if a centered `reference` is given, for the
/// W1 distance to it.
pub fn stationary_sample<R: Rng + ?Sized>(
    config: &StationaryConfig,
    initial: &[f64],
    profile: &RateProfile,
    law: &JumpLaw,
    reference: Option<&dyn AtomicCdf>,
    rng: &mut R,
) -> Result<StationarySample, ParticleError> {
    config.validate()?;
    if initial.len() != config.n {
        return Err(ParticleError::InvalidSampling(format!(
            "{} initial positions for n = {}",
            initial.len(),
            config.n
        )));
    }
    let burn_in = config.burn_in_time(profile);
    let mut state = ParticleState::new(initial)?;
    let times: Vec<f64> = (1..=config.samples).map(|k| burn_in + k as f64 * config.spacing).collect();
    let end = *times.last().expect("samples > 0");

    let mut diagnostics = Vec::with_capacity(config.samples);
    let mut snapshots = Vec::new();
    let mut failure = None;
    let mut observer = |t: f64, s: &ParticleState| {
        let c = CenteredState::from_positions(&s.positions(), t);
        let w1_ref = match reference.map(|r| wasserstein1(&c, r)) {
            Some(Ok(d)) => Some(d),
            Some(Err(e)) => {
                failure.get_or_insert(e);
                None
            }
            None => None,
        };
        diagnostics.push(StationaryDiagnostics {
            t,
            phi_1: absolute_moment(&c, 1.0).value,
            phi_1pchi: absolute_moment(&c, 1.0 + config.chi).value,
            g: lyapunov_g(&c, profile, config.chi),
            w1_ref,
        });
        if config.keep_snapshots {
            snapshots.push(c);
        }
    };
    run(&mut state, profile, law, end, rng, &times, &mut observer);
    if let Some(e) = failure {
        return Err(ParticleError::InvalidSampling(format!("reference distance: {e}")));
    }

    let series = |f: fn(&StationaryDiagnostics) -> Option<f64>| -> Option<Vec<f64>> { diagnostics.iter().map(f).collect() };
    let bm = |s: Vec<f64>| batch_means(&s, config.batches).expect("sample count validated");
    let phi = bm(series(|d| Some(d.phi_1pchi)).expect("always present"));
    let w1 = series(|d| d.w1_ref).map(bm);
    let max_g = diagnostics.iter().map(|d| d.g).fold(f64::NEG_INFINITY, f64::max);

    Ok(StationarySample {
        burn_in,
        v_n: v_n(profile, config.n),
        diagnostics,
        snapshots,
        phi_1pchi: phi,
        w1_ref: if reference.is_some() { w1 } else { None },
        max_g,
    })
}
