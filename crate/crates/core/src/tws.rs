//! Traveling-wave shape of the mean-field model.
//!
//! The shape is found by relaxation: evolve for a horizon `tau`, translate
//! back to mean zero, repeat until the W1 change per unit time is below
//! `tol_fix`. The discrete wave equation can also be solved directly by a
//! forward march, which gives an independent fixed point of the residual.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{JumpLaw, RateProfile};
use crate::metrics::wasserstein1;
use crate::mfm::{
    kernel_weights, ConvolutionMethod, Convolver, GridCdf, InitialSpec, KernelPlacement, MfmError, MfmSolver,
    MfmSolverParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwsError {
    #[error("relaxation did not converge in {iterations} iterations (last change {last_change:e}); trace: {trace:?}")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        trace: Vec<f64>,
    },
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("forward march leaves {0:e} of the mass beyond the window")]
    MarchIncomplete(f64),
    #[error(transparent)]
    Mfm(#[from] MfmError),
}

pub type Result<T> = std::result::Result<T, TwsError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwsParams {
    #[serde(default)]
    pub solver: MfmSolverParams,
    /// Relaxation horizon; rounded so that `v tau` is a whole number of cells.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_tol_fix")]
    pub tol_fix: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_start")]
    pub start: InitialSpec,
}

fn default_tau() -> f64 {
    1.0
}

fn default_tol_fix() -> f64 {
    1e-6
}

fn default_max_iters() -> usize {
    2000
}

fn default_start() -> InitialSpec {
    InitialSpec::Laplace { center: 0.0, scale: 1.0 }
}

impl Default for TwsParams {
    fn default() -> Self {
        Self {
            solver: MfmSolverParams::default(),
            tau: default_tau(),
            tol_fix: default_tol_fix(),
            max_iters: default_max_iters(),
            start: default_start(),
        }
    }
}

impl TwsParams {
    /// `tau` adjusted so that the wave moves a whole number of cells.
    pub fn effective_tau(&self, speed: f64) -> f64 {
        let cells = (speed * self.tau / self.solver.dx).round().max(1.0);
        cells * self.solver.dx / speed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    /// Mean-zero shape.
    pub shape: GridCdf,
    pub speed: f64,
    pub residual: f64,
    pub iterations: usize,
    /// W1 change per unit time at every iteration.
    pub trace: Vec<f64>,
    pub tau: f64,
    /// Whether the jump law is in the regime where the shape is unique up
    /// to translation; uniqueness checks are skipped otherwise.
    pub unique: bool,
}

/// `v = H(1)`.
pub fn wave_speed(profile: &RateProfile) -> f64 {
    profile.speed()
}

pub fn tws_solve(profile: &RateProfile, law: &JumpLaw, params: &TwsParams) -> Result<TravelingWave> {
    let solver = MfmSolver::new(params.solver, profile, law)?;
    let start = solver.initial(&params.start, 0.0)?;
    tws_solve_from(&solver, &start, params)
}

/// Relaxation from an explicit starting grid.
pub fn tws_solve_from(solver: &MfmSolver, start: &GridCdf, params: &TwsParams) -> Result<TravelingWave> {
    if !(params.tau > 0.0 && params.tol_fix > 0.0 && params.max_iters > 0) {
        return Err(TwsError::InvalidParams(format!(
            "tau = {}, tol_fix = {}, max_iters = {}",
            params.tau, params.tol_fix, params.max_iters
        )));
    }
    let speed = wave_speed(solver.profile());
    let tau = params.effective_tau(speed);
    let mut f = start.recentered();
    let mut trace = Vec::new();
    for it in 1..=params.max_iters {
        let mut traj = solver.solve(&f, &[tau])?;
        let mut g = traj.snapshots.pop().expect("one snapshot");
        solver.center_window(&mut g)?;
        // mass that jumped past the window would otherwise pile up at its
        // last node over many iterations; it is folded back into the window
        let g = g.normalized().recentered();
        let change = wasserstein1(&g, &f).map_err(MfmError::from)? / tau;
        trace.push(change);
        f = g;
        if change < params.tol_fix && converged(&trace, params.tol_fix) {
            let residual = tws_residual(&f, solver.profile(), solver.law());
            log::info!(
                "wave converged after {it} iterations: change {change:.3e}, residual {residual:.3e}, 10 tol/dx = {:.3e}",
                10.0 * params.tol_fix / f.dx()
            );
            return Ok(TravelingWave {
                shape: f,
                speed,
                residual,
                iterations: it,
                trace,
                tau,
                unique: solver.law().satisfies_density_condition(),
            });
        }
    }
    Err(TwsError::NotConverged {
        iterations: params.max_iters,
        last_change: *trace.last().expect("at least one iteration"),
        trace,
    })
}

/// Besides the last change being small, the changes still to come, summed
/// as a geometric series with the observed contraction ratio, must be small.
/// A single iteration has no ratio to go by and is accepted on its change.
fn converged(trace: &[f64], tol: f64) -> bool {
    let n = trace.len();
    if n < 2 {
        return true;
    }
    let rho = trace[n - 1] / trace[n - 2];
    rho < 1.0 && trace[n - 1] * rho / (1.0 - rho) < tol
}

/// `max_k |R_k| / dx` with
/// `R_k = v (phi_k - phi_(k-1)) - sum_(j < k) [H(phi_j) - H(phi_(j-1))] integral over [x_(k-1), x_k] of (1 - J)(u - x_j) du`.
pub fn tws_residual(phi: &GridCdf, profile: &RateProfile, law: &JumpLaw) -> f64 {
    let v = wave_speed(profile);
    let dx = phi.dx();
    let vals = phi.values();
    let flux = cell_flux(vals, profile, law, dx);
    (1..vals.len())
        .map(|k| (v * (vals[k] - vals[k - 1]) - flux[k - 1]).abs())
        .fold(0.0, f64::max)
        / dx
}

/// `sum_(j <= k) dH_j integral over [x_k, x_(k+1)] of (1 - J)(u - x_j) du`.
fn cell_flux(vals: &[f64], profile: &RateProfile, law: &JumpLaw, dx: f64) -> Vec<f64> {
    let w: Vec<f64> = kernel_weights(law, KernelPlacement::CellAverage, dx, vals.len())
        .into_iter()
        .map(|x| x * dx)
        .collect();
    let dh = h_increments(vals, profile);
    let mut out = vec![0.0; vals.len()];
    Convolver::new(w, ConvolutionMethod::Auto).apply(&dh, &mut out);
    out
}

fn h_increments(vals: &[f64], profile: &RateProfile) -> Vec<f64> {
    let mut prev = 0.0;
    vals.iter()
        .map(|&v| {
            let h = profile.antiderivative(v);
            let d = h - prev;
            prev = h;
            d
        })
        .collect()
}

/// Solves `R_k = 0` node by node from a small seed `phi_0`, then translates
/// the result to mean zero. The window is that of `params`.
pub fn tws_march(profile: &RateProfile, law: &JumpLaw, params: &MfmSolverParams, seed: f64) -> Result<GridCdf> {
    params.validate()?;
    if !(seed > 0.0 && seed < 1.0) {
        return Err(TwsError::InvalidParams(format!("seed {seed} must lie in (0, 1)")));
    }
    let v = wave_speed(profile);
    let dx = params.dx;
    let nodes = params.window(0.0).nodes();
    let w: Vec<f64> = kernel_weights(law, KernelPlacement::CellAverage, dx, nodes)
        .into_iter()
        .map(|x| x * dx)
        .collect();
    let mut phi = vec![0.0; nodes];
    let mut dh = vec![0.0; nodes];
    phi[0] = seed;
    dh[0] = profile.antiderivative(seed);
    for k in 1..nodes {
        let flux: f64 = dh[..k].iter().zip(w[..k].iter().rev()).map(|(a, b)| a * b).sum();
        phi[k] = (phi[k - 1] + flux / v).min(1.0);
        dh[k] = profile.antiderivative(phi[k]) - profile.antiderivative(phi[k - 1]);
    }
    let missing = 1.0 - phi[nodes - 1];
    if missing > params.eps_tail {
        return Err(TwsError::MarchIncomplete(missing));
    }
    Ok(GridCdf::new(-params.half_width, dx, phi)?.recentered())
}

/// `W1(recentered f(t), phi)` along a solve from `f0`.
pub fn tws_attraction_curve(solver: &MfmSolver, f0: &GridCdf, phi: &GridCdf, times: &[f64]) -> Result<Vec<f64>> {
    let traj = solver.solve(f0, times)?;
    traj.snapshots
        .iter()
        .map(|f| Ok(wasserstein1(&f.recentered(), phi).map_err(MfmError::from)?))
        .collect()
}

/// W1 between `phi` evolved for `tau` and translated back by `v tau`, and
/// `phi` itself.
pub fn wave_invariance_error(solver: &MfmSolver, phi: &GridCdf, tau: f64) -> Result<f64> {
    let v = wave_speed(solver.profile());
    let mut traj = solver.solve(phi, &[tau])?;
    let moved = traj.snapshots.pop().expect("one snapshot").translated(-v * tau);
    Ok(wasserstein1(&moved, phi).map_err(MfmError::from)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfm::grid_cdf_from_spec;

    fn lin() -> RateProfile {
        RateProfile::linear()
    }

    fn exp1() -> JumpLaw {
        JumpLaw::exponential(1.0).unwrap()
    }

    fn coarse() -> TwsParams {
        TwsParams {
            solver: MfmSolverParams {
                dx: 0.05,
                dt: 0.05,
                half_width: 20.0,
                ..MfmSolverParams::default()
            },
            ..TwsParams::default()
        }
    }

    #[test]
    fn speeds() {
        assert_eq!(wave_speed(&lin()), 0.5);
        assert!((wave_speed(&RateProfile::power(2.0).unwrap()) - 2.0 / 3.0).abs() < 1e-15);
        let nu: Vec<f64> = (0..=10_000).map(|i| i as f64 / 10_000.0).collect();
        let eta: Vec<f64> = nu.iter().map(|x| 1.0 - x).collect();
        let table = RateProfile::table(nu, eta).unwrap();
        assert!((wave_speed(&table) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn effective_tau_moves_whole_cells() {
        let p = coarse();
        assert_eq!(p.effective_tau(0.5), 1.0);
        let t = p.effective_tau(2.0 / 3.0);
        let cells = 2.0 / 3.0 * t / 0.05;
        assert!((cells - cells.round()).abs() < 1e-9);
    }

    #[test]
    fn march_is_an_exact_discrete_fixed_point() {
        let mut p = coarse();
        // a small seed pushes the wave right, so the window is widened
        p.solver.half_width = 25.0;
        let phi = tws_march(&lin(), &exp1(), &p.solver, 1e-11).unwrap();
        assert!(phi.mean().abs() < 1e-8);
        assert!(tws_residual(&phi, &lin(), &exp1()) <= 1e-10);
    }

    #[test]
    fn a_point_mass_is_not_a_wave() {
        let p = coarse();
        let d = grid_cdf_from_spec(&InitialSpec::Dirac { at: 0.0 }, p.solver.window(0.0), 1e-6).unwrap();
        let r = tws_residual(&d, &lin(), &exp1());
        let law = exp1();
        let floor = 0.5 * law.ccdf(p.solver.dx);
        assert!(r >= floor, "{r} < {floor}");
    }

    #[test]
    fn relaxation_converges_and_is_idempotent() {
        let p = coarse();
        let wave = tws_solve(&lin(), &exp1(), &p).unwrap();
        assert!(wave.shape.mean().abs() < 1e-8);
        assert!(wave.unique);
        // the relaxed shape is a fixed point of the time-stepping scheme, which
        // meets the node-wise wave equation only up to O(dx)
        assert!(wave.residual <= 0.05 * p.solver.dx, "{}", wave.residual);
        let mut wide = p.solver;
        wide.half_width = 25.0;
        let marched = tws_march(&lin(), &exp1(), &wide, 1e-11).unwrap();
        let gap = wasserstein1(&marched, &wave.shape).unwrap();
        assert!(gap <= p.solver.dx, "{gap}");
        let solver = MfmSolver::new(p.solver, &lin(), &exp1()).unwrap();
        let again = tws_solve_from(&solver, &wave.shape, &p).unwrap();
        assert_eq!(again.iterations, 1);
        assert!(again.trace[0] < p.tol_fix);
    }

    #[test]
    fn different_starts_agree() {
        let p = coarse();
        let a = tws_solve(&lin(), &exp1(), &p).unwrap();
        let mut q = coarse();
        q.start = InitialSpec::Uniform { a: -3.0, b: 3.0 };
        let b = tws_solve(&lin(), &exp1(), &q).unwrap();
        let d = wasserstein1(&a.shape, &b.shape).unwrap();
        assert!(d <= 5.0 * p.tol_fix * a.tau, "{d}");
    }

    #[test]
    fn non_density_laws_are_flagged() {
        let law = JumpLaw::new(&crate::distributions::JumpSpec::Uniform { a: 0.5, b: 1.5, normalize: true }).unwrap();
        let wave = tws_solve(&lin(), &law, &coarse()).unwrap();
        assert!(!wave.unique);
    }

    #[test]
    fn bad_parameters() {
        let mut p = coarse();
        p.tol_fix = 0.0;
        assert!(matches!(tws_solve(&lin(), &exp1(), &p), Err(TwsError::InvalidParams(_))));
        let mut p = coarse();
        p.max_iters = 3;
        assert!(matches!(tws_solve(&lin(), &exp1(), &p), Err(TwsError::NotConverged { iterations: 3, .. })));
    }
}
