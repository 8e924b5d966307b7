//! Runs the shipped configs and prints one line per acceptance criterion.
//! Outputs go to temporary directories; the lines are also written to
//! `target/acceptance.txt`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use quantwave::harness::{run_experiment, DiagnosticCheck, ExperimentConfig, ExperimentKind};
use quantwave::mfm::InitialSpec;
use quantwave::RunReport;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    config: ExperimentConfig,
    report: RunReport,
    elapsed: Duration,
    csv: BTreeMap<String, Vec<u8>>,
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn run(file: &str, out: &Path) -> Run {
    let mut config = ExperimentConfig::load(&configs_dir().join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
    config.output = Some(out.to_path_buf());
    let start = Instant::now();
    let report = run_experiment(&config).unwrap_or_else(|e| panic!("{file}: {e}"));
    let elapsed = start.elapsed();
    Run { config, report, elapsed, csv: csv_bytes(out) }
}

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Self { passed: true, detail: String::new() }
    }

    fn require(&mut self, ok: bool, what: impl AsRef<str>) {
        if !ok {
            self.passed = false;
            self.note(format!("NOT MET: {}", what.as_ref()));
        }
    }

    fn note(&mut self, s: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str(" | ");
        }
        self.detail.push_str(s.as_ref());
    }

    fn checks(&mut self, run: &Run, names: &[&str]) {
        for name in names {
            match run.report.check(name) {
                Some(c) => {
                    self.passed &= c.passed;
                    self.note(c.to_string());
                }
                None => self.require(false, format!("check {name} present")),
            }
        }
    }

    fn within(&mut self, run: &Run, limit_s: u64) {
        let secs = run.elapsed.as_secs_f64();
        self.require(secs <= limit_s as f64, format!("runtime {secs:.1} s <= {limit_s} s"));
        self.note(format!("runtime {secs:.1} s (limit {limit_s} s)"));
    }
}

fn diag(run: &Run) -> &quantwave::harness::DiagnosticsSettings {
    run.config.diagnostics.as_ref().expect("diagnostics settings")
}

fn has_tie(state: &[f64]) -> bool {
    let mut s = state.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).any(|w| w[0] == w[1])
}

fn uniform(spec: &InitialSpec, lo: f64, hi: f64) -> bool {
    matches!(spec, InitialSpec::Uniform { a, b } if *a == lo && *b == hi)
}

fn criterion(k: usize, run: &Run) -> Verdict {
    let c = &run.config;
    let mut v = Verdict::new();
    match k {
        1 => {
            v.require(c.n == [1000] && c.replicas == 20, "n = 1000 with 20 replicas");
            v.require(c.horizon.as_ref().is_some_and(|h| h.t_end == 20.0), "T = 20");
            v.require(diag(run).checks == [DiagnosticCheck::MeanDrift], "mean-drift check");
            v.checks(run, &["mean-drift"]);
            v.within(run, 30);
        }
        2 => {
            let d = diag(run);
            v.require(d.urges == 1_000_000, "10^6 urges per state");
            for n in 2..=4 {
                v.require(d.states.iter().any(|s| s.len() == n), format!("a state with n = {n}"));
                v.require(
                    d.states.iter().any(|s| s.len() == n && has_tie(s)),
                    format!("a co-located block at n = {n}"),
                );
            }
            v.checks(run, &["urge-oracle"]);
        }
        3 => {
            let st = c.stationary.as_ref().expect("stationary settings");
            v.require(c.n == [200] && st.samples == 10_000, "10^4 states at n = 200");
            let rows = run.report.table("lyapunov").map_or(0, |t| t.rows.len());
            v.require(rows == 10_000, format!("10^4 sampled states, got {rows}"));
            v.checks(run, &["lyapunov"]);
        }
        4 => {
            let h = c.horizon.as_ref().expect("horizon");
            v.require(h.output_times() == [1.0, 5.0, 10.0], "t in {1, 5, 10}");
            v.require(c.solver.dx == 0.01, "dx = 0.01");
            v.require(c.initial.as_ref().is_some_and(|i| uniform(i, -1.0, 1.0)), "uniform(-1, 1) start");
            v.checks(run, &["mass-transport"]);
            v.within(run, 60);
        }
        5 => {
            let first = c.initial.as_ref().expect("initial");
            let second = diag(run).second_initial.as_ref().expect("second initial");
            v.require(uniform(first, -1.0, 1.0), "uniform(-1, 1) start");
            v.require(
                matches!(second, InitialSpec::Empirical { points } if points == &[-1.0, 1.0]),
                "two-atom start at -1 and 1",
            );
            v.require(first.mean() == 0.0 && second.mean() == 0.0, "both starts have mean 0");
            v.checks(run, &["contraction"]);
        }
        6 => {
            v.require(c.solver.dx == 0.01, "dx = 0.01");
            v.require(c.tws.invariance_tau == Some(5.0), "invariance horizon 5");
            v.checks(run, &["tws-converged", "tws-residual", "wave-invariance", "tws-uniqueness"]);
            v.within(run, 300);
        }
        7 => {
            let times = c.horizon.as_ref().expect("horizon").output_times();
            v.require(times == (0..=50).map(f64::from).collect::<Vec<_>>(), "t in {0, 1, ..., 50}");
            v.require(c.tws.attraction_from.as_ref().is_some_and(|i| uniform(i, -4.0, 4.0)), "uniform(-4, 4) start");
            v.checks(run, &["tws-converged", "tws-attraction"]);
        }
        8 => {
            v.require(c.n == [100, 400, 1600] && c.replicas == 20, "n in {100, 400, 1600}, 20 replicas");
            v.require(c.horizon.as_ref().is_some_and(|h| h.output_times() == [5.0]), "T = 5");
            v.checks(run, &["transient-convergence"]);
            v.within(run, 300);
        }
        9 => {
            v.require(c.n == [50, 200, 800] && c.chi == 1.0, "n in {50, 200, 800}, Phi_2");
            v.checks(run, &["uniform-moments"]);
            v.within(run, 600);
        }
        10 => {
            v.require(c.n == [50, 200, 800], "n in {50, 200, 800}");
            v.checks(run, &["limit-interchange"]);
            v.within(run, 900);
        }
        _ => unreachable!(),
    }
    v
}

const CONFIGS: [(&str, ExperimentKind); 10] = [
    ("c01_mean_drift.toml", ExperimentKind::Diagnostics),
    ("c02_urge_oracle.toml", ExperimentKind::Diagnostics),
    ("c03_lyapunov.toml", ExperimentKind::Diagnostics),
    ("c04_mass_transport.toml", ExperimentKind::Diagnostics),
    ("c05_contraction.toml", ExperimentKind::Diagnostics),
    ("c06_tws_fixed_point.toml", ExperimentKind::TwsStudy),
    ("c07_tws_attraction.toml", ExperimentKind::TwsStudy),
    ("c08_transient.toml", ExperimentKind::TransientConvergence),
    ("c09_stationary_moments.toml", ExperimentKind::StationaryMoments),
    ("c10_limit_interchange.toml", ExperimentKind::LimitInterchange),
];

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut first_runs = Vec::new();
    for (k, (file, kind)) in CONFIGS.iter().enumerate() {
        let r = run(file, &tmp.path().join(format!("first-{k}")));
        assert_eq!(r.config.kind, *kind, "{file}");
        let v = criterion(k + 1, &r);
        let line = format!("[{}] criterion {} ({file}): {}", if v.passed { "PASS" } else { "FAIL" }, k + 1, v.detail);
        println!("{line}");
        lines.push((v.passed, line));
        first_runs.push(r);
    }

    // 11: every shipped config again, compared byte for byte
    let mut v = Verdict::new();
    let mut compared = 0;
    for (k, ((file, _), first)) in CONFIGS.iter().zip(&first_runs).enumerate() {
        let again = run(file, &tmp.path().join(format!("second-{k}")));
        v.require(first.csv.keys().eq(again.csv.keys()), format!("{file}: same set of tables"));
        for (name, bytes) in &first.csv {
            v.require(again.csv.get(name) == Some(bytes), format!("{file}: {name} identical"));
            compared += 1;
        }
    }
    v.note(format!("{compared} CSV files over {} configs byte-identical on rerun", CONFIGS.len()));
    let line = format!("[{}] criterion 11 (all configs): {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    println!("{line}");
    lines.push((v.passed, line));

    let text: String = lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    let target = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance.txt");
    fs::write(&target, &text).unwrap();
    let failed: Vec<&str> = lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l.as_str()).collect();
    assert!(failed.is_empty(), "{} of 11 criteria failed:\n{}", failed.len(), failed.join("\n"));
}
