//! Distances, moments and estimators shared by every study.

mod moments;
mod stats;
mod wasserstein;

pub use moments::{absolute_moment, MomentMethod, MomentReport};
pub use stats::{batch_means, mean_and_se, pooled_batch_means, slope_with_se, BatchEstimate, Slope};
pub use wasserstein::{signed_area, wasserstein1, AtomicCdf, Empirical};

use thiserror::Error;

/// Largest mass a distribution may leave outside its window before distances
/// to it are refused.
pub const TAIL_MASS_LIMIT: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distribution has no atoms")]
    Empty,
    #[error("total mass {0} differs from 1")]
    NotProbability(f64),
    #[error("{0} of the mass lies outside the represented window")]
    UnboundedSupport(f64),
    #[error("series of length {len} is too short for {batches} batches")]
    SeriesTooShort { len: usize, batches: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}
