use serde::{Deserialize, Serialize};

use crate::distributions::{JumpLaw, RateProfile};
use crate::metrics::{signed_area, wasserstein1};

use super::grid::{grid_cdf_from_spec, GridCdf, GridWindow, InitialSpec};
use super::kernel::{kernel_weights, ConvolutionMethod, Convolver, KernelPlacement};
use super::{MfmError, Result};

/// Largest monotonicity repair tolerated in one step.
pub const REPAIR_LIMIT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftPolicy {
    /// Move the window right by whole cells when the right tail grows past
    /// `eps_tail / 2` or the mean drifts an eighth of the window from the
    /// centre.
    #[default]
    Auto,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfmSolverParams {
    pub dx: f64,
    pub dt: f64,
    pub half_width: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_eps_tail")]
    pub eps_tail: f64,
    #[serde(default)]
    pub shift: ShiftPolicy,
    #[serde(default)]
    pub kernel: KernelPlacement,
    #[serde(default)]
    pub convolution: ConvolutionMethod,
}

fn default_eps_tail() -> f64 {
    1e-5
}

impl Default for MfmSolverParams {
    /// The reference resolution: `dx = dt = 0.01`, window `[-20, 20]`, RK4.
    fn default() -> Self {
        Self {
            dx: 0.01,
            dt: 0.01,
            half_width: 20.0,
            integrator: Integrator::Rk4,
            eps_tail: default_eps_tail(),
            shift: ShiftPolicy::Auto,
            kernel: KernelPlacement::CellAverage,
            convolution: ConvolutionMethod::Auto,
        }
    }
}

impl MfmSolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MfmError::InvalidParams(m));
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx must be positive, got {}", self.dx));
        }
        if !(self.dt > 0.0 && self.dt <= self.dx) {
            return bad(format!("need 0 < dt <= dx, got dt = {} and dx = {}", self.dt, self.dx));
        }
        if !(self.half_width >= 2.0 * self.dx && self.half_width.is_finite()) {
            return bad(format!("half width {} is too small", self.half_width));
        }
        if !(self.eps_tail > 0.0 && self.eps_tail <= 1e-4) {
            return bad(format!("eps_tail must lie in (0, 1e-4], got {}", self.eps_tail));
        }
        Ok(())
    }

    pub fn window(&self, center: f64) -> GridWindow {
        GridWindow {
            center,
            half_width: self.half_width,
            dx: self.dx,
        }
    }
}

/// Snapshots of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MfmTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridCdf>,
    /// Largest monotonicity repair over all steps.
    pub max_repair: f64,
    pub window_shifts: usize,
}

/// Explicit solver for the mean-field CDF equation
/// `dF_k/dt = -sum_(j <= k) [H(F_j) - H(F_(j-1))] w_(k-j)`.
#[derive(Debug, Clone)]
pub struct MfmSolver {
    params: MfmSolverParams,
    profile: RateProfile,
    law: JumpLaw,
    conv: Convolver,
}

impl MfmSolver {
    pub fn new(params: MfmSolverParams, profile: &RateProfile, law: &JumpLaw) -> Result<Self> {
        params.validate()?;
        let nodes = params.window(0.0).nodes();
        let weights = kernel_weights(law, params.kernel, params.dx, nodes);
        Ok(Self {
            params,
            profile: profile.clone(),
            law: law.clone(),
            conv: Convolver::new(weights, params.convolution),
        })
    }

    pub fn params(&self) -> &MfmSolverParams {
        &self.params
    }

    pub fn profile(&self) -> &RateProfile {
        &self.profile
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn nodes(&self) -> usize {
        self.conv.len()
    }

    /// Kernel weights `w_m`.
    pub fn weights(&self) -> &[f64] {
        self.conv.weights()
    }

    /// `spec` sampled on a window of this solver centred at `center`.
    pub fn initial(&self, spec: &InitialSpec, center: f64) -> Result<GridCdf> {
        grid_cdf_from_spec(spec, self.params.window(center), self.params.eps_tail)
    }

    fn check_grid(&self, f: &GridCdf) -> Result<()> {
        if f.len() != self.nodes() || (f.dx() - self.params.dx).abs() > 1e-12 * self.params.dx {
            return Err(MfmError::GridMismatch {
                nodes: f.len(),
                dx: f.dx(),
                expected_nodes: self.nodes(),
                expected_dx: self.params.dx,
            });
        }
        Ok(())
    }

    /// `sum_(j <= k) [H(F_j) - H(F_(j-1))] w_(k-j)` for every `k`.
    pub fn outflow(&self, f: &[f64], out: &mut [f64]) {
        let mut prev = 0.0;
        let dh: Vec<f64> = f
            .iter()
            .map(|&v| {
                let h = self.profile.antiderivative(v);
                let d = h - prev;
                prev = h;
                d
            })
            .collect();
        self.conv.apply(&dh, out);
    }

    fn rhs_into(&self, f: &[f64], out: &mut [f64]) {
        self.outflow(f, out);
        out.iter_mut().for_each(|v| *v = -*v);
    }

    pub fn rhs(&self, f: &GridCdf) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        let mut out = vec![0.0; f.len()];
        self.rhs_into(f.values(), &mut out);
        Ok(out)
    }

    /// One explicit step of size `dt` followed by the monotone clamp.
    /// Returns the size of the repair.
    pub fn step(&self, f: &mut GridCdf, dt: f64) -> Result<f64> {
        self.check_grid(f)?;
        if dt == 0.0 {
            return Ok(0.0);
        }
        let k = f.len();
        let y = f.values().to_vec();
        let mut next = match self.params.integrator {
            Integrator::Euler => {
                let mut k1 = vec![0.0; k];
                self.rhs_into(&y, &mut k1);
                y.iter().zip(&k1).map(|(a, b)| a + dt * b).collect::<Vec<f64>>()
            }
            Integrator::Rk4 => {
                let mut k1 = vec![0.0; k];
                let mut k2 = vec![0.0; k];
                let mut k3 = vec![0.0; k];
                let mut k4 = vec![0.0; k];
                let mut tmp = vec![0.0; k];
                self.rhs_into(&y, &mut k1);
                axpy(&y, 0.5 * dt, &k1, &mut tmp);
                self.rhs_into(&tmp, &mut k2);
                axpy(&y, 0.5 * dt, &k2, &mut tmp);
                self.rhs_into(&tmp, &mut k3);
                axpy(&y, dt, &k3, &mut tmp);
                self.rhs_into(&tmp, &mut k4);
                (0..k)
                    .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        let repair = monotone_clamp(&mut next);
        if repair > REPAIR_LIMIT {
            return Err(MfmError::SchemeUnstable { repair });
        }
        f.values_mut().copy_from_slice(&next);
        Ok(repair)
    }

    /// Moves the window by `cells` nodes (right when positive). Mass beyond
    /// the old window stays lumped where it was: at the new last node after a
    /// right move, at the old first node after a left move.
    fn shift_window(&self, f: &mut GridCdf, cells: isize) {
        let mut vals = f.values().to_vec();
        let n = vals.len();
        let c = cells.unsigned_abs().min(n - 1);
        if cells > 0 {
            let last = vals[n - 1];
            vals.copy_within(c.., 0);
            vals[n - c..].fill(last);
        } else {
            vals.copy_within(..n - c, c);
            vals[..c].fill(0.0);
        }
        *f = GridCdf::from_raw(f.x0() + cells as f64 * f.dx(), f.dx(), vals);
    }

    /// Moves the window by whole cells so that its centre is as close as
    /// possible to the mean of `f`, and returns the move.
    pub fn center_window(&self, f: &mut GridCdf) -> Result<isize> {
        self.check_grid(f)?;
        let drift = f.mean() - (f.x0() + self.params.half_width);
        let cells = (drift / self.params.dx).round() as isize;
        if cells != 0 {
            self.shift_window(f, cells);
        }
        self.check_tails(f)?;
        Ok(cells)
    }

    fn check_tails(&self, f: &GridCdf) -> Result<()> {
        let eps = self.params.eps_tail;
        if f.tail_left() > eps || f.tail_right() > eps {
            return Err(MfmError::WindowTooSmall {
                tail_left: f.tail_left(),
                tail_right: f.tail_right(),
            });
        }
        Ok(())
    }

    fn maybe_shift(&self, f: &mut GridCdf) -> Result<bool> {
        let eps = self.params.eps_tail;
        let mut shifted = false;
        if self.params.shift == ShiftPolicy::Auto {
            let drift = f.mean() - (f.x0() + self.params.half_width);
            if f.tail_right() > 0.5 * eps || drift > 0.125 * self.params.half_width {
                let cells = (drift / self.params.dx).round();
                if cells >= 1.0 {
                    self.shift_window(f, cells as isize);
                    shifted = true;
                }
            }
        }
        self.check_tails(f)?;
        Ok(shifted)
    }

    /// Evolves `f0` and records it at each of the non-decreasing `times`
    /// (measured from 0). Every interval between output times is split into
    /// equal steps no longer than `dt`.
    pub fn solve(&self, f0: &GridCdf, times: &[f64]) -> Result<MfmTrajectory> {
        self.check_grid(f0)?;
        if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(MfmError::InvalidParams("output times must be sorted and non-negative".into()));
        }
        let mut f = f0.clone();
        let mut t = 0.0;
        let mut out = MfmTrajectory {
            times: Vec::with_capacity(times.len()),
            snapshots: Vec::with_capacity(times.len()),
            max_repair: 0.0,
            window_shifts: 0,
        };
        for &target in times {
            let span = target - t;
            if span > 0.0 {
                let steps = (span / self.params.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    let r = self.step(&mut f, h)?;
                    out.max_repair = out.max_repair.max(r);
                    if self.maybe_shift(&mut f)? {
                        out.window_shifts += 1;
                    }
                }
                log::debug!("mfm reached t = {target}, repair so far {:.2e}", out.max_repair);
                t = target;
            }
            out.times.push(target);
            out.snapshots.push(f.clone());
        }
        Ok(out)
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64], out: &mut [f64]) {
    for ((o, &yi), &xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

/// Forward running maximum and clamp to `[0, 1]`; returns the largest change.
fn monotone_clamp(v: &mut [f64]) -> f64 {
    let mut repair: f64 = 0.0;
    let mut run = 0.0f64;
    for x in v.iter_mut() {
        let fixed = x.max(run).clamp(0.0, 1.0);
        repair = repair.max((fixed - *x).abs());
        *x = fixed;
        run = fixed;
    }
    repair
}

/// Right side of the mean-field equation on `f` with the given kernel.
pub fn mfm_rhs(f: &GridCdf, profile: &RateProfile, law: &JumpLaw, kernel: KernelPlacement) -> Result<Vec<f64>> {
    let params = MfmSolverParams {
        dx: f.dx(),
        dt: f.dx(),
        half_width: 0.5 * (f.len() - 1) as f64 * f.dx(),
        kernel,
        ..MfmSolverParams::default()
    };
    MfmSolver::new(params, profile, law)?.rhs(f)
}

/// One clamped explicit step from `f`.
pub fn mfm_step(
    f: &GridCdf,
    dt: f64,
    profile: &RateProfile,
    law: &JumpLaw,
    integrator: Integrator,
    kernel: KernelPlacement,
) -> Result<GridCdf> {
    let params = MfmSolverParams {
        dx: f.dx(),
        dt: f.dx(),
        half_width: 0.5 * (f.len() - 1) as f64 * f.dx(),
        integrator,
        kernel,
        ..MfmSolverParams::default()
    };
    let mut g = f.clone();
    MfmSolver::new(params, profile, law)?.step(&mut g, dt)?;
    Ok(g)
}

pub fn mfm_solve(
    f0: &GridCdf,
    times: &[f64],
    params: MfmSolverParams,
    profile: &RateProfile,
    law: &JumpLaw,
) -> Result<MfmTrajectory> {
    MfmSolver::new(params, profile, law)?.solve(f0, times)
}

pub fn w1_between(f: &GridCdf, g: &GridCdf) -> Result<f64> {
    Ok(wasserstein1(f, g)?)
}

/// `integral of (F_w(0) - F_w(t)) dw`, the mass carried to the right.
pub fn mass_transported(start: &GridCdf, later: &GridCdf) -> Result<f64> {
    Ok(signed_area(start, later)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::AtomicCdf;
    use proptest::prelude::*;

    fn lin() -> RateProfile {
        RateProfile::linear()
    }

    fn exp1() -> JumpLaw {
        JumpLaw::exponential(1.0).unwrap()
    }

    fn params(dx: f64, dt: f64, half_width: f64) -> MfmSolverParams {
        MfmSolverParams {
            dx,
            dt,
            half_width,
            ..MfmSolverParams::default()
        }
    }

    fn dirac(p: &MfmSolverParams) -> GridCdf {
        grid_cdf_from_spec(&InitialSpec::Dirac { at: 0.0 }, p.window(0.0), p.eps_tail).unwrap()
    }

    #[test]
    fn rhs_of_a_point_mass() {
        let p = params(0.05, 0.05, 10.0);
        let f = dirac(&p);
        let node = mfm_rhs(&f, &lin(), &exp1(), KernelPlacement::Node).unwrap();
        let cell = mfm_rhs(&f, &lin(), &exp1(), KernelPlacement::CellAverage).unwrap();
        for k in 0..f.len() {
            let x = f.x(k);
            let want = if x >= -1e-12 { -0.5 * (-x.max(0.0)).exp() } else { 0.0 };
            assert!((node[k] - want).abs() < 1e-14, "{x}: {} vs {want}", node[k]);
            assert!((cell[k] - want).abs() <= 0.5 * p.dx * want.abs() + 1e-14);
        }
    }

    #[test]
    fn exhausted_jumps_give_no_outflow() {
        let law = JumpLaw::new(&crate::distributions::JumpSpec::Uniform { a: 0.5, b: 1.5, normalize: true }).unwrap();
        let p = params(0.05, 0.05, 10.0);
        let f = dirac(&p);
        let r = mfm_rhs(&f, &lin(), &law, KernelPlacement::CellAverage).unwrap();
        for (k, rk) in r.iter().enumerate() {
            if f.x(k) > 1.6 {
                assert!(rk.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let p = params(0.1, 0.1, 5.0);
        let f = dirac(&p);
        let g = mfm_step(&f, 0.0, &lin(), &exp1(), Integrator::Rk4, KernelPlacement::CellAverage).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn euler_step_from_a_point_mass() {
        let p = params(0.1, 0.1, 5.0);
        let f = dirac(&p);
        let dt = 0.05;
        let g = mfm_step(&f, dt, &lin(), &exp1(), Integrator::Euler, KernelPlacement::Node).unwrap();
        for k in 0..f.len() {
            let x = f.x(k);
            let want = if x >= -1e-12 { 1.0 - dt * 0.5 * (-x.max(0.0)).exp() } else { 0.0 };
            assert!((g.values()[k] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn fft_and_direct_rhs_agree() {
        let mut p = params(0.02, 0.02, 8.0);
        let f = grid_cdf_from_spec(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, p.window(0.0), p.eps_tail).unwrap();
        p.convolution = ConvolutionMethod::Direct;
        let d = MfmSolver::new(p, &lin(), &exp1()).unwrap().rhs(&f).unwrap();
        p.convolution = ConvolutionMethod::Fft;
        let q = MfmSolver::new(p, &lin(), &exp1()).unwrap().rhs(&f).unwrap();
        let err = d.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    fn solve_to(p: MfmSolverParams, spec: &InitialSpec, t: f64) -> GridCdf {
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        let f0 = s.initial(spec, 0.0).unwrap();
        s.solve(&f0, &[t]).unwrap().snapshots.pop().unwrap()
    }

    fn sup_diff(a: &GridCdf, b: &GridCdf) -> f64 {
        assert_eq!(a.x0(), b.x0());
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn observed_order(integrator: Integrator) -> f64 {
        let spec = InitialSpec::Laplace { center: 0.0, scale: 1.0 };
        let run = |dt: f64| {
            let mut p = params(0.1, dt, 20.0);
            p.integrator = integrator;
            p.shift = ShiftPolicy::Never;
            solve_to(p, &spec, 1.0)
        };
        let (a, b, c) = (run(0.1), run(0.05), run(0.025));
        (sup_diff(&a, &b) / sup_diff(&b, &c)).log2()
    }

    #[test]
    fn rk4_is_fourth_order_in_time() {
        let order = observed_order(Integrator::Rk4);
        assert!(order >= 3.5, "observed order {order}");
    }

    #[test]
    fn euler_is_first_order_in_time() {
        let order = observed_order(Integrator::Euler);
        assert!((order - 1.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn joint_refinement_is_first_order() {
        // the space discretization limits joint refinement to first order
        let spec = InitialSpec::Uniform { a: -1.0, b: 1.0 };
        let run = |dx: f64| solve_to(params(dx, dx, 16.0), &spec, 5.0).recentered();
        let (a, b, c) = (run(0.08), run(0.04), run(0.02));
        let ratio = w1_between(&a, &b).unwrap() / w1_between(&b, &c).unwrap();
        assert!(ratio > 1.6 && ratio < 2.6, "ratio {ratio}");
    }

    #[test]
    fn short_time_law_from_a_point_mass() {
        let mut p = params(0.01, 0.01, 10.0);
        p.eps_tail = 1e-4;
        let t = 0.1;
        let f = solve_to(p, &InitialSpec::Dirac { at: 0.0 }, t);
        let worst = (0..f.len())
            .filter(|&k| f.x(k) >= -1e-12)
            .map(|k| (f.values()[k] - (1.0 - t * 0.5 * (-f.x(k)).exp())).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 5.0 * t * t, "{worst}");
    }

    #[test]
    fn mass_is_carried_at_the_wave_speed() {
        let p = params(0.02, 0.02, 16.0);
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        let f0 = s.initial(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, 0.0).unwrap();
        let traj = s.solve(&f0, &[1.0, 4.0, 8.0]).unwrap();
        assert!(traj.window_shifts > 0);
        for (t, f) in traj.times.iter().zip(&traj.snapshots) {
            let moved = mass_transported(&f0, f).unwrap();
            assert!((moved - 0.5 * t).abs() <= 1e-3 * 0.5 * t, "t = {t}: {moved}");
            // the window keeps its mass
            let total: f64 = f.atoms().map(|(_, m)| m).sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
        assert!(traj.max_repair < 1e-8);
    }

    #[test]
    fn cdf_decreases_in_time_at_every_point() {
        let mut p = params(0.02, 0.02, 14.0);
        p.eps_tail = 1e-4;
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        let f0 = s.initial(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, 0.0).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let traj = s.solve(&f0, &times).unwrap();
        assert!(traj.window_shifts > 0);
        for w in traj.snapshots.windows(2) {
            for k in 0..w[1].len() {
                let x = w[1].x(k);
                assert!(w[1].eval(x) <= w[0].eval(x) + 1e-12, "at {x}");
            }
        }
    }

    #[test]
    fn w1_contracts_between_solutions() {
        let p = params(0.02, 0.02, 16.0);
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        let a = s.initial(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, 0.0).unwrap();
        let b = s.initial(&InitialSpec::Empirical { points: vec![-1.0, 1.0] }, 0.0).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let ta = s.solve(&a, &times).unwrap();
        let tb = s.solve(&b, &times).unwrap();
        let d: Vec<f64> = ta.snapshots.iter().zip(&tb.snapshots).map(|(x, y)| w1_between(x, y).unwrap()).collect();
        for w in d.windows(2) {
            assert!(w[1] <= w[0] + 1e-4 * 0.5, "{d:?}");
        }
        assert!(d[20] < d[0]);
    }

    #[test]
    fn centering_the_window_keeps_the_distribution() {
        let p = params(0.05, 0.05, 6.0);
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        for (center, want) in [(1.3, -26), (-0.8, 16)] {
            let f = s.initial(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, center).unwrap();
            let mut g = f.clone();
            assert_eq!(s.center_window(&mut g).unwrap(), want);
            assert!((g.x0() + p.half_width).abs() < 1e-9);
            assert!(w1_between(&f, &g).unwrap() < 1e-12);
        }
    }

    #[test]
    fn narrow_window_is_reported() {
        let mut p = params(0.05, 0.05, 3.0);
        p.shift = ShiftPolicy::Never;
        let s = MfmSolver::new(p, &lin(), &exp1()).unwrap();
        let f0 = s.initial(&InitialSpec::Uniform { a: -1.0, b: 1.0 }, 0.0).unwrap();
        assert!(matches!(s.solve(&f0, &[10.0]), Err(MfmError::WindowTooSmall { .. })));
    }

    #[test]
    fn unstable_parameters_are_rejected() {
        assert!(params(0.01, 0.02, 5.0).validate().is_err());
        let mut p = params(0.01, 0.01, 5.0);
        p.eps_tail = 1e-3;
        assert!(p.validate().is_err());
        let s = MfmSolver::new(params(0.1, 0.1, 5.0), &lin(), &exp1()).unwrap();
        let wrong = GridCdf::new(0.0, 0.1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(s.rhs(&wrong), Err(MfmError::GridMismatch { .. })));
    }

    proptest! {
        #[test]
        fn rhs_lies_in_unit_interval_below_zero(raw in prop::collection::vec(0.0f64..1.0, 81), p in 0.3f64..3.0) {
            let mut v = raw;
            v.sort_by(f64::total_cmp);
            let f = GridCdf::new(-2.0, 0.05, v).unwrap();
            let prof = RateProfile::power(p).unwrap();
            for kernel in [KernelPlacement::CellAverage, KernelPlacement::Node, KernelPlacement::Midpoint] {
                let r = mfm_rhs(&f, &prof, &exp1(), kernel).unwrap();
                prop_assert!(r.iter().all(|&d| (-1.0..=1e-15).contains(&d)));
            }
        }
    }
}
