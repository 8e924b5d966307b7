//! Exact event-driven simulation.
//!
//! The `n` independent unit-rate urge clocks are realized as one Poisson
//! clock of rate `n` followed by a uniform choice of particle.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::distributions::{JumpLaw, RateProfile};

use super::ParticleState;

/// One jump urge: who got it, at which rank, and what came of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UrgeEvent {
    pub time: f64,
    /// Sorted index of the particle that received the urge, before moving.
    pub slot: usize,
    /// Quantile rank (1-based) after random tie-breaking.
    pub particle_rank: usize,
    pub accepted: bool,
    /// Zero unless accepted.
    pub jump_size: f64,
}

/// Outcome of an urge drawn against a fixed configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Urge {
    pub slot: usize,
    pub rank: usize,
    pub accepted: bool,
    pub jump_size: f64,
}

/// Draws the recipient, its tie-broken rank, the acceptance decision and the
/// jump size, without changing the state.
pub fn draw_urge<R: Rng + ?Sized>(state: &ParticleState, profile: &RateProfile, law: &JumpLaw, rng: &mut R) -> Urge {
    let n = state.n();
    let slot = rng.random_range(0..n);
    let (lo, hi) = state.block(slot);
    // ties are broken uniformly: rank is uniform over the co-located block
    let rank = if hi - lo > 1 { rng.random_range(lo..hi) + 1 } else { slot + 1 };
    let accepted = rng.random::<f64>() < profile.eta_rank(n, rank);
    let jump_size = if accepted { law.sample(rng) } else { 0.0 };
    Urge {
        slot,
        rank,
        accepted,
        jump_size,
    }
}

/// Time of the next urge, drawing it if it has not been drawn yet.
pub fn next_event_time<R: Rng + ?Sized>(state: &mut ParticleState, rng: &mut R) -> f64 {
    if let Some(t) = state.pending_event {
        return t;
    }
    let hold = Exp::new(state.n() as f64).expect("positive rate").sample(rng);
    let t = state.clock + hold;
    state.pending_event = Some(t);
    t
}

/// Advances to the next urge and applies it.
pub fn step<R: Rng + ?Sized>(state: &mut ParticleState, profile: &RateProfile, law: &JumpLaw, rng: &mut R) -> UrgeEvent {
    let time = next_event_time(state, rng);
    state.pending_event = None;
    state.clock = time;
    let urge = draw_urge(state, profile, law, rng);
    if urge.accepted {
        state.move_right(urge.slot, urge.jump_size);
    }
    UrgeEvent {
        time,
        slot: urge.slot,
        particle_rank: urge.rank,
        accepted: urge.accepted,
        jump_size: urge.jump_size,
    }
}

/// Receives the state at scheduled observation times.
pub trait Observer {
    fn observe(&mut self, time: f64, state: &ParticleState);
}

impl<F: FnMut(f64, &ParticleState)> Observer for F {
    fn observe(&mut self, time: f64, state: &ParticleState) {
        self(time, state)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub events: u64,
    pub accepted: u64,
}

/// Runs for `duration` time units, reporting the state at each of the sorted
/// `observe_at` times that falls in `(clock, clock + duration]`. The clock
/// ends exactly at `clock + duration`.
pub fn run<R, O>(
    state: &mut ParticleState,
    profile: &RateProfile,
    law: &JumpLaw,
    duration: f64,
    rng: &mut R,
    observe_at: &[f64],
    observer: &mut O,
) -> RunSummary
where
    R: Rng + ?Sized,
    O: Observer + ?Sized,
{
    assert!(duration >= 0.0, "duration must be non-negative");
    let start = state.clock;
    let end = start + duration;
    let mut obs = observe_at.iter().copied().skip_while(|&t| t <= start).peekable();
    let mut summary = RunSummary::default();
    loop {
        let next = next_event_time(state, rng);
        while let Some(&t) = obs.peek() {
            if t > end || t >= next {
                break;
            }
            observer.observe(t, state);
            obs.next();
        }
        if next > end {
            break;
        }
        let ev = step(state, profile, law, rng);
        summary.events += 1;
        summary.accepted += ev.accepted as u64;
    }
    state.clock = end;
    summary
}

/// [`run`] without observations.
pub fn advance<R: Rng + ?Sized>(
    state: &mut ParticleState,
    profile: &RateProfile,
    law: &JumpLaw,
    duration: f64,
    rng: &mut R,
) -> RunSummary {
    run(state, profile, law, duration, rng, &[], &mut |_: f64, _: &ParticleState| {})
}
