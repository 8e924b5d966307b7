use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use quantwave::harness::{
    emit_outputs, execute, run_experiment, ExperimentConfig, HarnessError, ENV_OUT, ENV_THREADS, PARTIAL_MARKER,
};

const COMMON: &str = r#"
[profile]
kind = "linear"

[law]
kind = "exponential"
rate = 1.0
"#;

const COARSE: &str = r#"
[solver]
dx = 0.05
dt = 0.05
half_width = 20.0
"#;

fn small(kind: &str) -> String {
    let body = match kind {
        "transient-convergence" => {
            r#"
seed = 3
replicas = 3
n = [10, 40]
[initial]
kind = "uniform"
a = -1.0
b = 1.0
[horizon]
t_end = 1.0
"#
        }
        "stationary-moments" => {
            r#"
seed = 4
replicas = 2
n = [10, 20]
placement = "iid"
[initial]
kind = "laplace"
center = 0.0
scale = 1.0
[stationary]
burn_in = 20.0
spacing = 1.0
samples = 40
batches = 4
"#
        }
        "limit-interchange" => {
            r#"
seed = 5
replicas = 2
n = [10, 20]
[initial]
kind = "uniform"
a = -1.0
b = 1.0
[stationary]
burn_in = 20.0
spacing = 1.0
samples = 40
batches = 4
[tws]
tol_fix = 1e-4
"#
        }
        "tws-study" => {
            r#"
seed = 6
[horizon]
t_end = 3.0
step = 1.0
[tws]
tol_fix = 1e-4
invariance_tau = 1.0
second_start = { kind = "uniform", a = -2.0, b = 2.0 }
attraction_from = { kind = "uniform", a = -2.0, b = 2.0 }
"#
        }
        "diagnostics" => {
            r#"
seed = 7
replicas = 3
n = [20]
[initial]
kind = "uniform"
a = -1.0
b = 1.0
[horizon]
t_end = 2.0
step = 1.0
[stationary]
burn_in = 10.0
spacing = 1.0
samples = 50
batches = 5
[diagnostics]
checks = ["mean-drift", "urge-oracle", "lyapunov", "mass-transport", "contraction"]
urges = 2000
states = [[-1.0, 1.0], [0.0, 0.0, 1.0]]
second_initial = { kind = "empirical", points = [-1.0, 1.0] }
"#
        }
        other => panic!("no small config for {other}"),
    };
    format!("kind = \"{kind}\"\n{body}{COMMON}{COARSE}")
}

const KINDS: [&str; 5] = [
    "transient-convergence",
    "stationary-moments",
    "limit-interchange",
    "tws-study",
    "diagnostics",
];

fn config(kind: &str, out: &Path, threads: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml(&small(kind)).unwrap();
    c.output = Some(out.to_path_buf());
    c.threads = Some(threads);
    c
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

/// `name.csv` to header, read from the documented schema.
fn documented_headers() -> BTreeMap<String, String> {
    let doc = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/formats.md")).unwrap();
    let mut out = BTreeMap::new();
    for line in doc.lines() {
        let ticks: Vec<&str> = line.split('`').collect();
        // "| `name.csv` | `a,b,c` | ..." has the file at 1 and the header at 3
        if ticks.len() >= 4 && ticks[1].ends_with(".csv") {
            out.insert(ticks[1].to_string(), ticks[3].to_string());
        }
    }
    out
}

fn schema_name(file: &str) -> String {
    // per-n tables are documented once as `<stem>_n<N>.csv`
    match file.rfind("_n") {
        Some(i) if file[i + 2..file.len() - 4].chars().all(|c| c.is_ascii_digit()) => {
            format!("{}_n<N>.csv", &file[..i])
        }
        _ => file.to_string(),
    }
}

#[test]
fn every_kind_runs_and_is_reproducible_across_thread_counts() {
    let docs = documented_headers();
    for kind in KINDS {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        let ra = run_experiment(&config(kind, &a, 1)).unwrap_or_else(|e| panic!("{kind}: {e}"));
        let rb = run_experiment(&config(kind, &b, 3)).unwrap();
        assert!(!ra.checks.is_empty(), "{kind} made no checks");
        assert_eq!(ra.checks, rb.checks, "{kind}");
        assert!(!a.join(PARTIAL_MARKER).exists());

        let (fa, fb) = (csv_bytes(&a), csv_bytes(&b));
        assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
        for (name, bytes) in &fa {
            assert!(bytes == &fb[name], "{kind}: {name} differs between thread counts");
            let header = String::from_utf8_lossy(bytes).lines().next().unwrap().to_string();
            let key = schema_name(name);
            assert_eq!(docs.get(&key), Some(&header), "{kind}: {name} header against docs/formats.md");
        }
        for t in &ra.tables {
            assert!(fa.contains_key(&format!("{}.csv", t.name)));
        }
        assert!(fa.contains_key("checks.csv"));
        assert!(a.join("manifest.json").exists() && a.join("config.toml").exists());
        // the thread count is part of the config and hence of its hash
        assert_ne!(ra.manifest.config_sha256, rb.manifest.config_sha256);
    }
}

#[test]
fn manifest_records_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_experiment(&config("transient-convergence", tmp.path(), 1)).unwrap();
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 3);
    assert_eq!(m["prng"], "chacha8");
    assert_eq!(m["kind"], "transient-convergence");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["tables"].as_array().unwrap().len(), report.tables.len());
    // the stored config reproduces the run
    let again = ExperimentConfig::from_toml(&fs::read_to_string(tmp.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(execute(&again).unwrap().tables, report.tables);
}

#[test]
fn a_different_seed_changes_the_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config("transient-convergence", tmp.path(), 1);
    let a = execute(&c).unwrap();
    c.seed += 1;
    let b = execute(&c).unwrap();
    assert_ne!(a.table("transient_w1"), b.table("transient_w1"));
    assert_eq!(a.table("mfm_snapshots"), b.table("mfm_snapshots"));
}

#[test]
fn plots_are_optional() {
    let tmp = tempfile::tempdir().unwrap();
    let report = execute(&config("tws-study", tmp.path(), 1)).unwrap();
    let plain = tmp.path().join("plain");
    let files = emit_outputs(&report, &plain, false).unwrap();
    assert!(files.iter().all(|p| p.extension().is_some_and(|x| x != "svg")));
    let drawn = tmp.path().join("drawn");
    let files = emit_outputs(&report, &drawn, true).unwrap();
    let svgs: Vec<&PathBuf> = files.iter().filter(|p| p.extension().is_some_and(|x| x == "svg")).collect();
    assert_eq!(svgs.len(), report.plots.len());
    for s in svgs {
        assert!(fs::read_to_string(s).unwrap().starts_with("<svg"));
    }
    assert_eq!(csv_bytes(&plain), csv_bytes(&drawn));
}

#[test]
fn a_failing_run_leaves_a_partial_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small("transient-convergence").replace("a = -1.0\nb = 1.0", "a = -40.0\nb = 40.0");
    let mut c = ExperimentConfig::from_toml(&text).unwrap();
    c.output = Some(tmp.path().to_path_buf());
    let err = run_experiment(&c).unwrap_err();
    assert!(err.to_string().contains("transient-convergence"), "{err}");
    let marker = fs::read_to_string(tmp.path().join(PARTIAL_MARKER)).unwrap();
    assert!(marker.starts_with("failed:"), "{marker}");
}

#[test]
fn failed_checks_are_reported_not_raised() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small("tws-study").replace("tol_fix = 1e-4", "tol_fix = 1e-4\nmax_iters = 2");
    let mut c = ExperimentConfig::from_toml(&text).unwrap();
    c.output = Some(tmp.path().to_path_buf());
    let report = run_experiment(&c).unwrap();
    assert!(!report.passed());
    assert!(!report.check("tws-converged").unwrap().passed);
    assert!(report.table("tws_trace").is_some());
}

#[test]
fn config_errors() {
    let empty_n = small("transient-convergence").replace("n = [10, 40]", "n = []");
    assert!(matches!(ExperimentConfig::from_toml(&empty_n), Err(HarnessError::Config(_))));
    let missing = small("stationary-moments").replace("[stationary]", "[stationary_]");
    assert!(ExperimentConfig::from_toml(&missing).is_err());
    let bad_kind = small("diagnostics").replace("\"lyapunov\", ", "\"lyapunov-sign\", ");
    assert!(ExperimentConfig::from_toml(&bad_kind).is_err());
    let unstable = small("tws-study").replace("dt = 0.05", "dt = 0.1");
    assert!(ExperimentConfig::from_toml(&unstable).is_err());
}

#[test]
fn environment_overrides_output_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::from_toml(&small("tws-study")).unwrap();
    std::env::set_var(ENV_OUT, tmp.path());
    std::env::set_var(ENV_THREADS, "2");
    let applied = c.apply_env();
    std::env::set_var(ENV_THREADS, "many");
    let rejected = c.clone().apply_env();
    std::env::remove_var(ENV_OUT);
    std::env::remove_var(ENV_THREADS);
    applied.unwrap();
    assert_eq!(c.output_dir(), tmp.path());
    assert_eq!(c.threads, Some(2));
    assert!(rejected.is_err());
}

#[test]
fn snapshots_are_written_on_request() {
    let text = small("stationary-moments").replace("batches = 4", "batches = 4\nsnapshots = true");
    let c = ExperimentConfig::from_toml(&text).unwrap();
    let report = execute(&c).unwrap();
    for n in [10usize, 20] {
        let t = report.table(&format!("snapshots_n{n}")).unwrap();
        assert_eq!(t.header, ["replica", "t", "rank", "w"]);
        assert_eq!(t.rows.len(), 2 * 40 * n);
    }
    let plain = execute(&ExperimentConfig::from_toml(&small("stationary-moments")).unwrap()).unwrap();
    assert!(plain.table("snapshots_n10").is_none());
    assert_eq!(plain.table("moments"), report.table("moments"));
}
