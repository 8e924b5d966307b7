use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use quantwave::harness::{
    run_experiment, DiagnosticCheck, ExperimentConfig, ExperimentKind, HarnessError, PARTIAL_MARKER,
};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "quantwave", version, about = "Quantile-interacting particle experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, replacing the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides QWAVE_OUT and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replicas per particle count.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads; overrides QWAVE_THREADS and the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Particle system against the mean-field model (transient-convergence).
    Simulate,
    /// Mean-field diagnostics: mass transport and contraction.
    Mfm,
    /// Traveling-wave study (tws-study).
    Tws,
    /// Stationary moments by n (stationary-moments).
    Stationary,
    /// Stationary distance to the traveling wave by n (limit-interchange).
    Interchange,
    /// Any diagnostics config.
    Diag,
    /// Prints the checks of a finished output directory.
    Report,
}

impl Command {
    fn accepts(self, config: &ExperimentConfig) -> bool {
        match self {
            Command::Simulate => config.kind == ExperimentKind::TransientConvergence,
            Command::Mfm => {
                config.kind == ExperimentKind::Diagnostics
                    && config.diagnostics.as_ref().is_some_and(|d| {
                        d.checks
                            .iter()
                            .all(|c| matches!(c, DiagnosticCheck::MassTransport | DiagnosticCheck::Contraction))
                    })
            }
            Command::Tws => config.kind == ExperimentKind::TwsStudy,
            Command::Stationary => config.kind == ExperimentKind::StationaryMoments,
            Command::Interchange => config.kind == ExperimentKind::LimitInterchange,
            Command::Diag => config.kind == ExperimentKind::Diagnostics,
            Command::Report => true,
        }
    }
}

fn load(global: &Global) -> Result<ExperimentConfig, HarnessError> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    config.apply_env()?;
    if let Some(s) = global.seed {
        config.seed = s;
    }
    if let Some(o) = &global.out {
        config.output = Some(o.clone());
    }
    if let Some(r) = global.replicas {
        config.replicas = r;
    }
    if let Some(t) = global.threads {
        config.threads = Some(t);
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, Box<dyn std::error::Error>> {
    if let Command::Report = cli.command {
        let dir = match (&cli.global.out, &cli.global.config) {
            (Some(o), _) => o.clone(),
            (None, Some(_)) => load(&cli.global)?.output_dir(),
            (None, None) => return Err("report needs --out or --config".into()),
        };
        return report(&dir);
    }
    let config = load(&cli.global)?;
    if !cli.command.accepts(&config) {
        return Err(format!("this subcommand does not run {} configs", config.kind.as_str()).into());
    }
    let start = Instant::now();
    let report = run_experiment(&config)?;
    for c in &report.checks {
        println!("{c}");
    }
    println!(
        "{} finished in {:.1} s; outputs in {}",
        config.kind.as_str(),
        start.elapsed().as_secs_f64(),
        config.output_dir().display()
    );
    Ok(report.passed())
}

fn report(dir: &Path) -> Result<bool, Box<dyn std::error::Error>> {
    let marker = dir.join(PARTIAL_MARKER);
    if marker.exists() {
        let why = std::fs::read_to_string(&marker).unwrap_or_default();
        return Err(format!("{} holds an incomplete run: {}", dir.display(), why.trim()).into());
    }
    println!("{}", std::fs::read_to_string(dir.join("manifest.json"))?.trim());
    let mut all = true;
    let mut reader = csv::Reader::from_path(dir.join("checks.csv"))?;
    for row in reader.records() {
        let row = row?;
        let passed = &row[1] == "true";
        all &= passed;
        println!(
            "[{}] {}: measured {}, tolerance {}; {}",
            if passed { "PASS" } else { "FAIL" },
            &row[0],
            &row[2],
            &row[3],
            &row[4]
        );
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
