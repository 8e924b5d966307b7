//! One function per experiment kind. Every stochastic job draws from its own
//! stream keyed by `(master seed, key, replica)`, and parallel results are
//! collected in job order, so tables do not depend on the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{JumpLaw, RateProfile};
use crate::metrics::{mean_and_se, pooled_batch_means, slope_with_se, wasserstein1, BatchEstimate};
use crate::mfm::{mass_transported, GridCdf, InitialSpec, MfmSolver};
use crate::particle::{
    advance, enumerate_urge_outcome, sample_urge_increments, stationary_sample, v_n, ParticleState, StationarySample,
};
use crate::rng::{derive_seed, replica_rng, SimRng};
use crate::tws::{tws_attraction_curve, tws_solve_from, wave_invariance_error, TravelingWave, TwsError};

use super::config::{DiagnosticCheck, ExperimentConfig, ExperimentKind, Placement};
use super::output::write_report;
use super::report::{CheckResult, Manifest, PlotSpec, RunReport, Table, Value};
use super::{HarnessError, Result};

pub const MEAN_DRIFT_SIGMAS: f64 = 3.0;
pub const URGE_ORACLE_SIGMAS: f64 = 4.0;
pub const LYAPUNOV_ROUNDING: f64 = 1e-12;
pub const MASS_TRANSPORT_REL: f64 = 1e-3;
pub const CONTRACTION_SLACK: f64 = 1e-4;
pub const TWS_RESIDUAL: f64 = 1e-3;
pub const WAVE_INVARIANCE: f64 = 5e-3;
pub const ATTRACTION_FINAL: f64 = 1e-2;
pub const UNIQUENESS_FACTOR: f64 = 5.0;
pub const TRANSIENT_RATIO: f64 = 0.5;
pub const MOMENT_JOINT_SE: f64 = 3.0;
pub const INTERCHANGE_RATIO: f64 = 0.6;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

/// Stream keys outside the range of particle counts.
const ORACLE_KEY: u64 = 1 << 62;

fn stream(master: u64, key: u64, replica: u64) -> SimRng {
    replica_rng(derive_seed(master, key), replica)
}

struct Study<'a> {
    config: &'a ExperimentConfig,
    profile: RateProfile,
    law: JumpLaw,
    tables: Vec<Table>,
    checks: Vec<CheckResult>,
    plots: Vec<PlotSpec>,
}

/// Runs the study described by `config` and returns its report without
/// touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let mut study = Study {
        config,
        profile: config.rate_profile()?,
        law: config.jump_law()?,
        tables: Vec::new(),
        checks: Vec::new(),
        plots: Vec::new(),
    };
    pool.install(|| -> Result<()> {
        match config.kind {
            ExperimentKind::TransientConvergence => study.transient(),
            ExperimentKind::StationaryMoments => study.stationary_moments(),
            ExperimentKind::LimitInterchange => study.interchange(),
            ExperimentKind::TwsStudy => study.tws_study(),
            ExperimentKind::Diagnostics => {
                let checks = config.diagnostics.as_ref().expect("validated").checks.clone();
                for c in checks {
                    study.diagnostic(c).map_err(|e| e.context(c.as_str()))?;
                }
                Ok(())
            }
        }
    })
    .map_err(|e| e.context(config.kind.as_str()))?;

    let mut manifest = Manifest::for_config(config);
    manifest.tables = study.tables.iter().map(|t| t.name.clone()).collect();
    Ok(RunReport {
        manifest,
        config: config.clone(),
        tables: study.tables,
        checks: study.checks,
        plots: study.plots,
    })
}

/// Runs the study and writes its artifacts to the output directory. A
/// `.partial` marker stays there until every file has been written; if the
/// study fails, the marker records the error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let dir = config.output_dir();
    let marker = super::output::begin(&dir, config)?;
    match execute(config).and_then(|report| write_report(&report, &dir, config.plots).map(|_| report)) {
        Ok(report) => {
            std::fs::remove_file(&marker).map_err(|e| HarnessError::io(&marker, e))?;
            Ok(report)
        }
        Err(e) => {
            // the original error matters more than a failure to annotate it
            let _ = std::fs::write(&marker, format!("failed: {e}\n"));
            Err(e)
        }
    }
}

fn estimate(values: &[f64]) -> BatchEstimate {
    mean_and_se(values).unwrap_or(BatchEstimate {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        se: f64::NAN,
        batches: values.len(),
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn grid_table(name: &str, rows: impl IntoIterator<Item = (f64, GridCdf)>) -> Table {
    let mut t = Table::new(name, &["t", "x", "F"]);
    for (time, f) in rows {
        for (k, &v) in f.values().iter().enumerate() {
            t.push(vec![time.into(), f.x(k).into(), v.into()]);
        }
    }
    t
}

fn snapshot_table(n: usize, group: &[StationarySample]) -> Table {
    let mut t = Table::new(format!("snapshots_n{n}"), &["replica", "t", "rank", "w"]);
    for (r, s) in group.iter().enumerate() {
        for c in &s.snapshots {
            for (i, &w) in c.w().iter().enumerate() {
                t.push(vec![r.into(), c.time().into(), (i + 1).into(), w.into()]);
            }
        }
    }
    t
}

fn phi_table(phi: &GridCdf) -> Table {
    let mut t = Table::new("phi", &["x", "phi"]);
    for (k, &v) in phi.values().iter().enumerate() {
        t.push(vec![phi.x(k).into(), v.into()]);
    }
    t
}

impl Study<'_> {
    fn positions(&self, spec: &InitialSpec, n: usize, rng: &mut SimRng) -> Vec<f64> {
        match self.config.placement {
            Placement::Quantile => spec.quantile_points(n),
            Placement::Iid => (0..n).map(|_| spec.quantile(rng.random::<f64>())).collect(),
        }
    }

    fn solver(&self) -> Result<MfmSolver> {
        Ok(MfmSolver::new(self.config.solver, &self.profile, &self.law)?)
    }

    /// All `(n, replica)` pairs in table order.
    fn jobs(&self) -> Vec<(usize, usize)> {
        self.config
            .n
            .iter()
            .flat_map(|&n| (0..self.config.replicas).map(move |r| (n, r)))
            .collect()
    }

    fn transient(&mut self) -> Result<()> {
        let cfg = self.config;
        let init = cfg.require_initial()?.clone();
        let t_end = cfg.require_horizon()?.t_end;
        let solver = self.solver()?;
        let f0 = solver.initial(&init, init.mean())?;
        let traj = solver.solve(&f0, &[t_end])?;
        let f_t = traj.snapshots[0].clone();
        let target = f_t.recentered();

        let jobs = self.jobs();
        let w1: Vec<f64> = jobs
            .par_iter()
            .map(|&(n, r)| -> Result<f64> {
                let mut rng = stream(cfg.seed, n as u64, r as u64);
                let x = self.positions(&init, n, &mut rng);
                let mut s = ParticleState::new(&x)?;
                advance(&mut s, &self.profile, &self.law, t_end, &mut rng);
                Ok(wasserstein1(&s.recenter(), &target)?)
            })
            .collect::<Result<_>>()?;

        let mut runs = Table::new("transient_w1", &["n", "replica", "w1"]);
        for (&(n, r), &d) in jobs.iter().zip(&w1) {
            runs.push(vec![n.into(), r.into(), d.into()]);
        }
        let mut summary = Table::new("transient_summary", &["n", "mean_w1", "se_w1", "replicas"]);
        let mut means = Vec::new();
        for (i, &n) in cfg.n.iter().enumerate() {
            let e = estimate(&w1[i * cfg.replicas..(i + 1) * cfg.replicas]);
            summary.push(vec![n.into(), e.mean.into(), e.se.into(), cfg.replicas.into()]);
            means.push(e.mean);
        }
        let ratio = means[means.len() - 1] / means[0];
        let decreasing = strictly_decreasing(&means);
        self.checks.push(CheckResult::flag(
            "transient-convergence",
            decreasing && ratio <= TRANSIENT_RATIO,
            ratio,
            TRANSIENT_RATIO,
            format!("W1 at t = {t_end} by n: [{}]; strictly decreasing: {decreasing}; measured is last / first", list(&means)),
        ));
        self.plots.push(PlotSpec {
            name: "w1_vs_n".into(),
            title: format!("W1 to the mean-field model at t = {t_end}"),
            x_label: "n".into(),
            y_label: "mean W1".into(),
            log_x: true,
            log_y: true,
            series: vec![("particles".into(), cfg.n.iter().map(|&n| n as f64).zip(means).collect())],
        });
        self.tables.push(runs);
        self.tables.push(summary);
        self.tables.push(grid_table("mfm_snapshots", [(t_end, f_t)]));
        Ok(())
    }

    fn stationary_runs(&self, reference: Option<&GridCdf>) -> Result<Vec<StationarySample>> {
        let cfg = self.config;
        let init = cfg.require_initial()?;
        let st = cfg.require_stationary()?;
        self.jobs()
            .par_iter()
            .map(|&(n, r)| {
                let mut rng = stream(cfg.seed, n as u64, r as u64);
                let x = self.positions(init, n, &mut rng);
                let reference = reference.map(|g| g as &dyn crate::metrics::AtomicCdf);
                Ok(stationary_sample(&st.for_n(n, cfg.chi), &x, &self.profile, &self.law, reference, &mut rng)?)
            })
            .collect()
    }

    fn stationary_moments(&mut self) -> Result<()> {
        let cfg = self.config;
        let batches = cfg.require_stationary()?.batches;
        let runs = self.stationary_runs(None)?;
        let mut summary = Table::new("moments", &["n", "burn_in", "estimate", "se", "batches", "max_G"]);
        let (mut est, mut se) = (Vec::new(), Vec::new());
        for (i, &n) in cfg.n.iter().enumerate() {
            let group = &runs[i * cfg.replicas..(i + 1) * cfg.replicas];
            let mut diag = Table::new(format!("diagnostics_n{n}"), &["replica", "t", "Phi_1", "Phi_1pchi", "G", "v_n"]);
            for (r, s) in group.iter().enumerate() {
                for d in &s.diagnostics {
                    diag.push(vec![r.into(), d.t.into(), d.phi_1.into(), d.phi_1pchi.into(), d.g.into(), s.v_n.into()]);
                }
            }
            if cfg.require_stationary()?.snapshots {
                self.tables.push(snapshot_table(n, group));
            }
            let series: Vec<Vec<f64>> = group.iter().map(|s| s.diagnostics.iter().map(|d| d.phi_1pchi).collect()).collect();
            let e = pooled_batch_means(&series, batches)?;
            let max_g = group.iter().map(|s| s.max_g).fold(f64::NEG_INFINITY, f64::max);
            summary.push(vec![n.into(), group[0].burn_in.into(), e.mean.into(), e.se.into(), e.batches.into(), max_g.into()]);
            est.push(e.mean);
            se.push(e.se);
            self.tables.push(diag);
        }
        let (imax, imin) = argmax_argmin(&est);
        let spread = est[imax] - est[imin];
        let joint = (se[imax].powi(2) + se[imin].powi(2)).sqrt();
        let ns: Vec<f64> = cfg.n.iter().map(|&n| n as f64).collect();
        let slope = slope_with_se(&ns, &est, &se)?;
        let (lo, hi) = slope.interval(Z95);
        let flat_ci = lo <= 0.0 && 0.0 <= hi;
        let order = format!("Phi_{}", 1.0 + cfg.chi);
        self.checks.push(CheckResult::flag(
            "uniform-moments",
            spread <= MOMENT_JOINT_SE * joint || flat_ci,
            spread,
            MOMENT_JOINT_SE * joint,
            format!(
                "{order} by n: [{}] +- [{}]; measured is max - min against {MOMENT_JOINT_SE} joint SE; slope in n {:.3e}, 95% CI [{lo:.3e}, {hi:.3e}]",
                list(&est),
                list(&se),
                slope.slope
            ),
        ));
        self.plots.push(PlotSpec {
            name: "moment_vs_n".into(),
            title: format!("Stationary {order} by n"),
            x_label: "n".into(),
            y_label: format!("E {order}"),
            log_x: true,
            log_y: false,
            series: vec![
                ("estimate".into(), ns.iter().copied().zip(est.iter().copied()).collect()),
                ("estimate - 2 SE".into(), ns.iter().zip(est.iter().zip(&se)).map(|(&n, (&e, &s))| (n, e - 2.0 * s)).collect()),
                ("estimate + 2 SE".into(), ns.iter().zip(est.iter().zip(&se)).map(|(&n, (&e, &s))| (n, e + 2.0 * s)).collect()),
            ],
        });
        self.tables.push(summary);
        Ok(())
    }

    fn solve_wave(&self, solver: &MfmSolver, start: &InitialSpec) -> Result<TravelingWave> {
        let f0 = solver.initial(start, start.mean())?;
        Ok(tws_solve_from(solver, &f0, &self.config.tws_params())?)
    }

    fn wave_tables(&mut self, wave: &TravelingWave, solver_nodes: usize) {
        let mut trace = Table::new("tws_trace", &["iteration", "change"]);
        for (i, &c) in wave.trace.iter().enumerate() {
            trace.push(vec![(i + 1).into(), c.into()]);
        }
        let mut meta = Table::new("wave", &["quantity", "value"]);
        let rows: [(&str, Value); 8] = [
            ("speed", wave.speed.into()),
            ("residual", wave.residual.into()),
            ("iterations", wave.iterations.into()),
            ("tau", wave.tau.into()),
            ("mean", wave.shape.mean().into()),
            ("dx", wave.shape.dx().into()),
            ("nodes", solver_nodes.into()),
            ("unique", wave.unique.into()),
        ];
        for (k, v) in rows {
            meta.push(vec![k.into(), v]);
        }
        self.plots.push(PlotSpec {
            name: "phi".into(),
            title: "Traveling-wave shape".into(),
            x_label: "x".into(),
            y_label: "phi".into(),
            log_x: false,
            log_y: false,
            series: vec![(
                "phi".into(),
                (0..wave.shape.len()).map(|k| (wave.shape.x(k), wave.shape.values()[k])).collect(),
            )],
        });
        self.tables.push(phi_table(&wave.shape));
        self.tables.push(meta);
        self.tables.push(trace);
    }

    fn interchange(&mut self) -> Result<()> {
        let cfg = self.config;
        let batches = cfg.require_stationary()?.batches;
        let solver = self.solver()?;
        let wave = self.solve_wave(&solver, &cfg.tws.start)?;
        let runs = self.stationary_runs(Some(&wave.shape))?;
        let mut summary = Table::new("interchange", &["n", "burn_in", "estimate", "se", "batches"]);
        let mut est = Vec::new();
        for (i, &n) in cfg.n.iter().enumerate() {
            let group = &runs[i * cfg.replicas..(i + 1) * cfg.replicas];
            let mut w = Table::new(format!("interchange_w1_n{n}"), &["replica", "t", "W1"]);
            let mut series = Vec::new();
            for (r, s) in group.iter().enumerate() {
                let d: Vec<f64> = s.diagnostics.iter().map(|d| d.w1_ref.expect("reference given")).collect();
                for (diag, &v) in s.diagnostics.iter().zip(&d) {
                    w.push(vec![r.into(), diag.t.into(), v.into()]);
                }
                series.push(d);
            }
            let e = pooled_batch_means(&series, batches)?;
            summary.push(vec![n.into(), group[0].burn_in.into(), e.mean.into(), e.se.into(), e.batches.into()]);
            est.push(e.mean);
            self.tables.push(w);
        }
        let ratio = est[est.len() - 1] / est[0];
        let decreasing = strictly_decreasing(&est);
        self.checks.push(CheckResult::flag(
            "limit-interchange",
            decreasing && ratio <= INTERCHANGE_RATIO,
            ratio,
            INTERCHANGE_RATIO,
            format!(
                "stationary W1 to phi by n: [{}]; strictly decreasing: {decreasing}; measured is last / first",
                list(&est)
            ),
        ));
        self.plots.push(PlotSpec {
            name: "w1_vs_n".into(),
            title: "Stationary W1 to the traveling wave".into(),
            x_label: "n".into(),
            y_label: "E W1".into(),
            log_x: true,
            log_y: true,
            series: vec![("particles".into(), cfg.n.iter().map(|&n| n as f64).zip(est).collect())],
        });
        self.wave_tables(&wave, solver.nodes());
        self.tables.push(summary);
        Ok(())
    }

    fn tws_study(&mut self) -> Result<()> {
        let cfg = self.config;
        let solver = self.solver()?;
        let wave = match self.solve_wave(&solver, &cfg.tws.start) {
            Ok(w) => w,
            Err(HarnessError::Tws(TwsError::NotConverged {
                iterations, last_change, trace,
            })) => {
                let mut t = Table::new("tws_trace", &["iteration", "change"]);
                for (i, &c) in trace.iter().enumerate() {
                    t.push(vec![(i + 1).into(), c.into()]);
                }
                self.tables.push(t);
                self.checks.push(CheckResult::flag(
                    "tws-converged",
                    false,
                    last_change,
                    cfg.tws.tol_fix,
                    format!("no convergence in {iterations} iterations"),
                ));
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let last = *wave.trace.last().expect("one iteration");
        self.checks.push(CheckResult::flag(
            "tws-converged",
            true,
            last,
            cfg.tws.tol_fix,
            format!("{} iterations of horizon {:.6}", wave.iterations, wave.tau),
        ));
        self.checks.push(CheckResult::at_most(
            "tws-residual",
            wave.residual,
            TWS_RESIDUAL,
            format!("max |R_k| / dx at dx = {}", solver.params().dx),
        ));
        if let Some(tau) = cfg.tws.invariance_tau {
            let err = wave_invariance_error(&solver, &wave.shape, tau)?;
            self.checks.push(CheckResult::at_most(
                "wave-invariance",
                err,
                WAVE_INVARIANCE,
                format!("W1 after evolving {tau} and shifting back by v tau"),
            ));
        }
        if let Some(second) = &cfg.tws.second_start {
            if wave.unique {
                let other = self.solve_wave(&solver, second)?;
                let d = wasserstein1(&other.shape, &wave.shape)?;
                let tol = UNIQUENESS_FACTOR * cfg.tws.tol_fix * wave.tau;
                self.checks.push(CheckResult::at_most(
                    "tws-uniqueness",
                    d,
                    tol,
                    format!("W1 between shapes relaxed from two starts ({} and {} iterations)", wave.iterations, other.iterations),
                ));
            } else {
                log::warn!("jump law lacks a density bounded below; uniqueness check skipped");
            }
        }
        if let Some(from) = &cfg.tws.attraction_from {
            let times = cfg.require_horizon()?.output_times();
            let f0 = solver.initial(from, from.mean())?;
            let curve = tws_attraction_curve(&solver, &f0, &wave.shape, &times)?;
            let mut t = Table::new("attraction", &["t", "w1"]);
            for (&s, &d) in times.iter().zip(&curve) {
                t.push(vec![s.into(), d.into()]);
            }
            let decreasing = strictly_decreasing(&curve);
            let last = *curve.last().expect("output times");
            let violation = curve
                .windows(2)
                .zip(&times[1..])
                .find(|(w, _)| w[1] >= w[0])
                .map(|(_, t)| format!(" (first increase at t = {t})"))
                .unwrap_or_default();
            self.checks.push(CheckResult::flag(
                "tws-attraction",
                decreasing && last <= ATTRACTION_FINAL,
                last,
                ATTRACTION_FINAL,
                format!("W1 to phi from t = 0 to {}; strictly decreasing: {decreasing}{violation}; measured is the final value", times[times.len() - 1]),
            ));
            self.plots.push(PlotSpec {
                name: "w1_vs_t".into(),
                title: "W1 of the re-centered flow to phi".into(),
                x_label: "t".into(),
                y_label: "W1".into(),
                log_x: false,
                log_y: true,
                series: vec![("attraction".into(), times.iter().copied().zip(curve).collect())],
            });
            self.tables.push(t);
        }
        self.wave_tables(&wave, solver.nodes());
        Ok(())
    }

    fn diagnostic(&mut self, check: DiagnosticCheck) -> Result<()> {
        match check {
            DiagnosticCheck::MeanDrift => self.mean_drift(),
            DiagnosticCheck::UrgeOracle => self.urge_oracle(),
            DiagnosticCheck::Lyapunov => self.lyapunov(),
            DiagnosticCheck::MassTransport => self.mass_transport(),
            DiagnosticCheck::Contraction => self.contraction(),
        }
    }

    fn mean_drift(&mut self) -> Result<()> {
        let cfg = self.config;
        let init = cfg.require_initial()?;
        let t_end = cfg.require_horizon()?.t_end;
        let n = cfg.n[0];
        let disp: Vec<f64> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let mut rng = stream(cfg.seed, n as u64, r as u64);
                let x = self.positions(init, n, &mut rng);
                let mut s = ParticleState::new(&x)?;
                let before = s.mean();
                advance(&mut s, &self.profile, &self.law, t_end, &mut rng);
                Ok(s.mean() - before)
            })
            .collect::<Result<_>>()?;
        let mut t = Table::new("mean_drift", &["replica", "displacement", "rate"]);
        let rates: Vec<f64> = disp.iter().map(|d| d / t_end).collect();
        for (r, (&d, &v)) in disp.iter().zip(&rates).enumerate() {
            t.push(vec![r.into(), d.into(), v.into()]);
        }
        let e = estimate(&rates);
        let vn = v_n(&self.profile, n);
        self.checks.push(CheckResult::at_most(
            "mean-drift",
            (e.mean - vn).abs(),
            MEAN_DRIFT_SIGMAS * e.se,
            format!("rate {:.6} +- {:.6} over {} replicas against v_n = {vn:.6}", e.mean, e.se, cfg.replicas),
        ));
        self.tables.push(t);
        Ok(())
    }

    fn urge_oracle(&mut self) -> Result<()> {
        let cfg = self.config;
        let d = cfg.diagnostics.as_ref().expect("validated");
        let results = d
            .states
            .par_iter()
            .enumerate()
            .map(|(i, x)| -> Result<_> {
                let state = ParticleState::new(x)?;
                let exact = enumerate_urge_outcome(&state, &self.profile, &self.law)?;
                let mut rng = stream(cfg.seed, ORACLE_KEY + i as u64, 0);
                let est = sample_urge_increments(&state, &self.profile, &self.law, d.urges, &mut rng);
                Ok((state, exact, est))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Table::new("urge_oracle", &["state", "n", "particle", "position", "exact", "estimate", "se", "z"]);
        let mut worst: f64 = 0.0;
        for (i, (state, exact, est)) in results.iter().enumerate() {
            for (p, &ex) in exact.iter().enumerate() {
                let diff = est.mean[p] - ex;
                let z = if est.se[p] > 0.0 {
                    diff / est.se[p]
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z.abs());
                t.push(vec![
                    i.into(),
                    state.n().into(),
                    p.into(),
                    state.position(p).into(),
                    ex.into(),
                    est.mean[p].into(),
                    est.se[p].into(),
                    z.into(),
                ]);
            }
        }
        self.checks.push(CheckResult::at_most(
            "urge-oracle",
            worst,
            URGE_ORACLE_SIGMAS,
            format!("largest |z| over {} frozen states, {} urges each", d.states.len(), d.urges),
        ));
        self.tables.push(t);
        Ok(())
    }

    fn lyapunov(&mut self) -> Result<()> {
        let cfg = self.config;
        let n = cfg.n[0];
        let init = cfg.require_initial()?;
        let st = cfg.require_stationary()?.for_n(n, cfg.chi);
        let runs: Vec<StationarySample> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(cfg.seed, n as u64, r as u64);
                let x = self.positions(init, n, &mut rng);
                Ok(stationary_sample(&st, &x, &self.profile, &self.law, None, &mut rng)?)
            })
            .collect::<Result<_>>()?;
        let mut t = Table::new("lyapunov", &["replica", "t", "G"]);
        let mut worst = f64::NEG_INFINITY;
        let mut violations = 0usize;
        for (r, s) in runs.iter().enumerate() {
            for d in &s.diagnostics {
                t.push(vec![r.into(), d.t.into(), d.g.into()]);
                worst = worst.max(d.g);
                violations += (d.g > LYAPUNOV_ROUNDING) as usize;
            }
        }
        self.checks.push(CheckResult::at_most(
            "lyapunov",
            worst,
            LYAPUNOV_ROUNDING,
            format!("largest G over {} states at n = {n}; {violations} violations", t.rows.len()),
        ));
        self.tables.push(t);
        Ok(())
    }

    fn mass_transport(&mut self) -> Result<()> {
        let cfg = self.config;
        let init = cfg.require_initial()?;
        let times = cfg.require_horizon()?.output_times();
        let solver = self.solver()?;
        let f0 = solver.initial(init, init.mean())?;
        let traj = solver.solve(&f0, &times)?;
        let v = self.profile.speed();
        let mut t = Table::new("mass_transport", &["t", "transported", "vt", "rel_err"]);
        let mut worst: f64 = 0.0;
        for (&s, f) in times.iter().zip(&traj.snapshots) {
            if s == 0.0 {
                continue;
            }
            let m = mass_transported(&f0, f)?;
            let rel = (m - v * s).abs() / (v * s);
            worst = worst.max(rel);
            t.push(vec![s.into(), m.into(), (v * s).into(), rel.into()]);
        }
        self.checks.push(CheckResult::at_most(
            "mass-transport",
            worst,
            MASS_TRANSPORT_REL,
            format!(
                "largest relative error at t in [{}]; largest monotonicity repair {:.2e}",
                list(&times),
                traj.max_repair
            ),
        ));
        self.tables.push(t);
        let later = times.iter().copied().zip(traj.snapshots).filter(|(s, _)| *s > 0.0);
        self.tables.push(grid_table("mfm_snapshots", std::iter::once((0.0, f0)).chain(later)));
        Ok(())
    }

    fn contraction(&mut self) -> Result<()> {
        let cfg = self.config;
        let a = cfg.require_initial()?;
        let b = cfg.diagnostics.as_ref().and_then(|d| d.second_initial.as_ref()).expect("validated");
        let times = cfg.require_horizon()?.output_times();
        let solver = self.solver()?;
        let center = a.mean();
        let (ta, tb) = rayon::join(
            || -> Result<_> { Ok(solver.solve(&solver.initial(a, center)?, &times)?) },
            || -> Result<_> { Ok(solver.solve(&solver.initial(b, center)?, &times)?) },
        );
        let (ta, tb) = (ta?, tb?);
        let w1: Vec<f64> = ta
            .snapshots
            .iter()
            .zip(&tb.snapshots)
            .map(|(f, g)| wasserstein1(f, g))
            .collect::<std::result::Result<_, _>>()?;
        let mut t = Table::new("contraction", &["t", "w1"]);
        for (&s, &d) in times.iter().zip(&w1) {
            t.push(vec![s.into(), d.into()]);
        }
        let worst = w1
            .windows(2)
            .zip(times.windows(2))
            .map(|(w, s)| (w[1] - w[0]) / (s[1] - s[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        self.checks.push(CheckResult::at_most(
            "contraction",
            worst,
            CONTRACTION_SLACK,
            format!(
                "largest increase of W1 per unit time; W1 from {:.4e} to {:.4e}; initial means {} and {}",
                w1[0],
                w1[w1.len() - 1],
                a.mean(),
                b.mean()
            ),
        ));
        self.plots.push(PlotSpec {
            name: "w1_vs_t".into(),
            title: "W1 between two mean-field solutions".into(),
            x_label: "t".into(),
            y_label: "W1".into(),
            log_x: false,
            log_y: true,
            series: vec![("contraction".into(), times.iter().copied().zip(w1).collect())],
        });
        self.tables.push(t);
        Ok(())
    }
}

fn argmax_argmin(v: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[imax] {
            imax = i;
        }
        if x < v[imin] {
            imin = i;
        }
    }
    (imax, imin)
}
