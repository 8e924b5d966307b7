//! Config-driven experiments, their reports and on-disk artifacts.

mod checkpoint;
mod config;
mod output;
mod report;
mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{
    DiagnosticCheck, DiagnosticsSettings, ExperimentConfig, ExperimentKind, Horizon, Placement, StationarySettings,
    TwsSettings, ENV_OUT, ENV_THREADS,
};
pub use output::{emit_outputs, PARTIAL_MARKER};
pub use report::{CheckResult, Manifest, RunReport, Table, Value};
pub use run::{execute, run_experiment};

use crate::distributions::DistributionError;
use crate::metrics::MetricError;
use crate::mfm::MfmError;
use crate::particle::ParticleError;
use crate::tws::TwsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Particle(#[from] ParticleError),
    #[error(transparent)]
    Mfm(#[from] MfmError),
    #[error(transparent)]
    Tws(#[from] TwsError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a checkpoint file")]
    BadMagic { path: PathBuf },
    #[error("{path}: checkpoint version {found}, this build reads version {expected}")]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: checksum mismatch, the checkpoint is corrupted")]
    Checksum { path: PathBuf },
    #[error("{path}: malformed checkpoint: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("plot {name}: {reason}")]
    Plot { name: String, reason: String },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        HarnessError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
