//! Grid solver for the deterministic mean-field model.

mod grid;
mod kernel;
mod solver;

pub use grid::{grid_cdf_from_spec, GridCdf, GridWindow, InitialSpec};
pub use kernel::{kernel_weights, ConvolutionMethod, Convolver, KernelPlacement, FFT_THRESHOLD};
pub use solver::{
    mass_transported, mfm_rhs, mfm_solve, mfm_step, w1_between, Integrator, MfmSolver, MfmSolverParams, MfmTrajectory,
    ShiftPolicy, REPAIR_LIMIT,
};

use thiserror::Error;

use crate::metrics::MetricError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfmError {
    #[error("window leaves {tail_left:e} below and {tail_right:e} above the grid")]
    WindowTooSmall { tail_left: f64, tail_right: f64 },
    #[error("monotonicity repair of {repair:e} exceeds the stability limit")]
    SchemeUnstable { repair: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid initial distribution: {0}")]
    InvalidInitial(String),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("grid with {nodes} nodes and spacing {dx} does not match the solver ({expected_nodes} nodes, spacing {expected_dx})")]
    GridMismatch { nodes: usize, dx: f64, expected_nodes: usize, expected_dx: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, MfmError>;
