use crate::metrics::{AtomicCdf, Empirical};

use super::store::{SortedPositions, Storage};
use super::ParticleError;

/// Positions of `n` particles, kept sorted, together with the simulation
/// clock.
///
/// `pending_event` holds the time of the next jump urge once it has been
/// drawn, so that a run split at an arbitrary time and resumed consumes the
/// random stream exactly like an uninterrupted run.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub(crate) positions: SortedPositions,
    pub(crate) clock: f64,
    pub(crate) sum: f64,
    pub(crate) pending_event: Option<f64>,
}

impl ParticleState {
    pub fn new(positions: &[f64]) -> Result<Self, ParticleError> {
        Self::with_storage(positions, Storage::Auto)
    }

    pub fn with_storage(positions: &[f64], storage: Storage) -> Result<Self, ParticleError> {
        if positions.is_empty() {
            return Err(ParticleError::EmptySystem);
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(ParticleError::NonFinite { index: i });
        }
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sum = sorted.iter().sum();
        Ok(Self {
            positions: SortedPositions::from_sorted(sorted, storage),
            clock: 0.0,
            sum,
            pending_event: None,
        })
    }

    /// Restores a state saved mid-run.
    pub fn from_parts(positions: &[f64], clock: f64, pending_event: Option<f64>) -> Result<Self, ParticleError> {
        let mut s = Self::new(positions)?;
        if !clock.is_finite() || clock < 0.0 {
            return Err(ParticleError::InvalidClock(clock));
        }
        s.clock = clock;
        s.pending_event = pending_event;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn storage(&self) -> Storage {
        if self.positions.is_chunked() {
            Storage::Chunked
        } else {
            Storage::Flat
        }
    }

    /// Sum of positions as accumulated jump by jump, which can differ from a
    /// fresh sum in the last bits.
    pub fn running_sum(&self) -> f64 {
        self.sum
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn pending_event(&self) -> Option<f64> {
        self.pending_event
    }

    /// Running mean, maintained incrementally.
    pub fn mean(&self) -> f64 {
        self.sum / self.n() as f64
    }

    pub fn position(&self, i: usize) -> f64 {
        self.positions.get(i)
    }

    pub fn positions(&self) -> Vec<f64> {
        self.positions.to_vec()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter()
    }

    /// Index range of the particles co-located with particle `i`.
    pub fn block(&self, i: usize) -> (usize, usize) {
        self.positions.block(i)
    }

    pub(crate) fn move_right(&mut self, i: usize, dz: f64) {
        let x = self.positions.get(i) + dz;
        self.positions.move_right(i, x);
        self.sum += dz;
    }

    /// Positions relative to their mean.
    pub fn recenter(&self) -> CenteredState {
        let x = self.positions();
        CenteredState::from_positions(&x, self.clock)
    }
}

impl AtomicCdf for ParticleState {
    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        let m = 1.0 / self.n() as f64;
        Box::new(self.positions.iter().map(move |x| (x, m)))
    }

    fn is_empirical(&self) -> bool {
        true
    }
}

/// Particle positions listed in non-decreasing order relative to their mean,
/// so that they sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredState {
    w: Vec<f64>,
    time: f64,
}

impl CenteredState {
    /// Centers sorted positions `x`.
    pub fn from_positions(x: &[f64], time: f64) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let mut w: Vec<f64> = x.iter().map(|v| v - mean).collect();
        // one refinement pass removes the rounding left in the first mean
        let residual = w.iter().sum::<f64>() / n;
        if residual != 0.0 {
            w.iter_mut().for_each(|v| *v -= residual);
        }
        debug_assert!(w.windows(2).all(|p| p[0] <= p[1]));
        Self { w, time }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn as_empirical(&self) -> Empirical<'_> {
        Empirical(&self.w)
    }
}

impl AtomicCdf for CenteredState {
    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        let m = 1.0 / self.w.len() as f64;
        Box::new(self.w.iter().map(move |&x| (x, m)))
    }

    fn is_empirical(&self) -> bool {
        true
    }
}
