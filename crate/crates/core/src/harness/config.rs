//! Experiment description read from TOML. Unknown keys are rejected at every
//! level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{JumpLaw, JumpSpec, ProfileSpec, RateProfile};
use crate::mfm::{InitialSpec, MfmSolverParams};
use crate::particle::StationaryConfig;
use crate::tws::TwsParams;

use super::{HarnessError, Result};

pub const ENV_OUT: &str = "QWAVE_OUT";
pub const ENV_THREADS: &str = "QWAVE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TransientConvergence,
    StationaryMoments,
    LimitInterchange,
    TwsStudy,
    Diagnostics,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::TransientConvergence => "transient-convergence",
            ExperimentKind::StationaryMoments => "stationary-moments",
            ExperimentKind::LimitInterchange => "limit-interchange",
            ExperimentKind::TwsStudy => "tws-study",
            ExperimentKind::Diagnostics => "diagnostics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCheck {
    MeanDrift,
    UrgeOracle,
    Lyapunov,
    MassTransport,
    Contraction,
}

impl DiagnosticCheck {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticCheck::MeanDrift => "mean-drift",
            DiagnosticCheck::UrgeOracle => "urge-oracle",
            DiagnosticCheck::Lyapunov => "lyapunov",
            DiagnosticCheck::MassTransport => "mass-transport",
            DiagnosticCheck::Contraction => "contraction",
        }
    }
}

/// How initial particle positions are drawn from `initial`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// `x_i = Q((i - 1/2) / n)`, the same for every replica.
    #[default]
    Quantile,
    /// Independent draws, different per replica.
    Iid,
}

/// Output times: `times` if given, else `0, step, 2 step, ...` up to
/// `t_end` if `step` is given, else just `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
}

impl Horizon {
    pub fn output_times(&self) -> Vec<f64> {
        if !self.times.is_empty() {
            return self.times.clone();
        }
        match self.step {
            Some(h) => {
                let k = (self.t_end / h + 1e-9).floor() as usize;
                (0..=k).map(|i| i as f64 * h).collect()
            }
            None => vec![self.t_end],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(format!("horizon: {m}")));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be a non-negative time");
        }
        if matches!(self.step, Some(h) if !(h > 0.0 && h.is_finite())) {
            return bad("step must be positive");
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("times must be increasing and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    pub spacing: f64,
    pub samples: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Also write every re-centered snapshot.
    #[serde(default)]
    pub snapshots: bool,
}

fn default_batches() -> usize {
    20
}

impl StationarySettings {
    pub fn for_n(&self, n: usize, chi: f64) -> StationaryConfig {
        StationaryConfig {
            n,
            burn_in: self.burn_in,
            spacing: self.spacing,
            samples: self.samples,
            chi,
            batches: self.batches,
            keep_snapshots: self.snapshots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwsSettings {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_tol_fix")]
    pub tol_fix: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_start")]
    pub start: InitialSpec,
    /// Horizon of the wave-invariance check; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariance_tau: Option<f64>,
    /// Second relaxation start for the uniqueness check; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_start: Option<InitialSpec>,
    /// Start of the attraction curve, evaluated at the horizon's output
    /// times; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attraction_from: Option<InitialSpec>,
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

impl Default for TwsSettings {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            tol_fix: default_tol_fix(),
            max_iters: default_max_iters(),
            start: default_start(),
            invariance_tau: None,
            second_start: None,
            attraction_from: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSettings {
    pub checks: Vec<DiagnosticCheck>,
    /// Urges per frozen state for `urge-oracle`.
    #[serde(default = "default_urges")]
    pub urges: u64,
    /// Frozen states for `urge-oracle`.
    #[serde(default = "default_states")]
    pub states: Vec<Vec<f64>>,
    /// Second initial law for `contraction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_initial: Option<InitialSpec>,
}

fn default_urges() -> u64 {
    1_000_000
}

fn default_states() -> Vec<Vec<f64>> {
    vec![
        vec![-1.0, 1.0],
        vec![0.0, 0.0],
        vec![-1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0],
        vec![-1.0, 0.5, 0.5],
        vec![0.0, 0.0, 0.0],
        vec![-2.0, -1.0, 1.0, 2.0],
        vec![-1.0, -1.0, 1.0, 1.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_chi")]
    pub chi: f64,
    pub profile: ProfileSpec,
    pub law: JumpSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Horizon>,
    #[serde(default)]
    pub solver: MfmSolverParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationarySettings>,
    #[serde(default)]
    pub tws: TwsSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub plots: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_replicas() -> usize {
    1
}

fn default_chi() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn rate_profile(&self) -> Result<RateProfile> {
        Ok(RateProfile::new(&self.profile)?)
    }

    pub fn jump_law(&self) -> Result<JumpLaw> {
        Ok(JumpLaw::new(&self.law)?)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(self.kind.as_str()))
    }

    pub fn tws_params(&self) -> TwsParams {
        TwsParams {
            solver: self.solver,
            tau: self.tws.tau,
            tol_fix: self.tws.tol_fix,
            max_iters: self.tws.max_iters,
            start: self.tws.start.clone(),
        }
    }

    /// Applies `QWAVE_OUT` and `QWAVE_THREADS` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Some(out) = std::env::var_os(ENV_OUT) {
            self.output = Some(PathBuf::from(out));
        }
        if let Ok(t) = std::env::var(ENV_THREADS) {
            let t = t
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("{ENV_THREADS}={t} is not a thread count")))?;
            self.threads = Some(t);
        }
        Ok(())
    }

    pub(crate) fn require_initial(&self) -> Result<&InitialSpec> {
        self.initial
            .as_ref()
            .ok_or_else(|| HarnessError::Config(format!("{} needs an [initial] table", self.kind.as_str())))
    }

    pub(crate) fn require_horizon(&self) -> Result<&Horizon> {
        self.horizon
            .as_ref()
            .ok_or_else(|| HarnessError::Config(format!("{} needs a [horizon] table", self.kind.as_str())))
    }

    pub(crate) fn require_stationary(&self) -> Result<&StationarySettings> {
        self.stationary
            .as_ref()
            .ok_or_else(|| HarnessError::Config(format!("{} needs a [stationary] table", self.kind.as_str())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.rate_profile()?;
        self.jump_law()?;
        self.solver.validate()?;
        if let Some(init) = &self.initial {
            init.validate()?;
        }
        if let Some(h) = &self.horizon {
            h.validate()?;
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return bad(format!("chi = {} must be positive", self.chi));
        }
        if self.n.contains(&0) {
            return bad("particle counts must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let needs_n = match self.kind {
            ExperimentKind::TransientConvergence
            | ExperimentKind::StationaryMoments
            | ExperimentKind::LimitInterchange => true,
            ExperimentKind::TwsStudy => false,
            ExperimentKind::Diagnostics => self.diagnostics.as_ref().is_some_and(|d| {
                d.checks
                    .iter()
                    .any(|c| matches!(c, DiagnosticCheck::MeanDrift | DiagnosticCheck::Lyapunov))
            }),
        };
        if needs_n && self.n.is_empty() {
            return bad(format!("{} needs a non-empty n list", self.kind.as_str()));
        }
        match self.kind {
            ExperimentKind::TransientConvergence => {
                self.require_initial()?;
                self.require_horizon()?;
                if self.n.len() < 2 {
                    return bad("a convergence study needs at least two particle counts".into());
                }
            }
            ExperimentKind::StationaryMoments | ExperimentKind::LimitInterchange => {
                self.require_initial()?;
                let st = self.require_stationary()?;
                for &n in &self.n {
                    st.for_n(n, self.chi)
                        .validate()
                        .map_err(|e| HarnessError::Config(format!("stationary: {e}")))?;
                }
                if self.n.len() < 2 {
                    return bad("a study over n needs at least two particle counts".into());
                }
            }
            ExperimentKind::TwsStudy => {
                if self.tws.attraction_from.is_some() {
                    self.require_horizon()?;
                }
            }
            ExperimentKind::Diagnostics => {
                let Some(d) = &self.diagnostics else {
                    return bad("diagnostics needs a [diagnostics] table".into());
                };
                if d.checks.is_empty() {
                    return bad("diagnostics: empty check list".into());
                }
                for c in &d.checks {
                    match c {
                        DiagnosticCheck::MeanDrift => {
                            self.require_initial()?;
                            self.require_horizon()?;
                            if self.replicas < 2 {
                                return bad("mean-drift needs at least two replicas".into());
                            }
                        }
                        DiagnosticCheck::UrgeOracle => {
                            if d.urges < 2 {
                                return bad("urge-oracle needs at least two urges".into());
                            }
                            if d.states.iter().any(|s| s.is_empty() || s.iter().any(|x| !x.is_finite())) {
                                return bad("urge-oracle states must be non-empty and finite".into());
                            }
                        }
                        DiagnosticCheck::Lyapunov => {
                            self.require_initial()?;
                            let st = self.require_stationary()?;
                            st.for_n(self.n[0], self.chi)
                                .validate()
                                .map_err(|e| HarnessError::Config(format!("stationary: {e}")))?;
                        }
                        DiagnosticCheck::MassTransport => {
                            self.require_initial()?;
                            self.require_horizon()?;
                        }
                        DiagnosticCheck::Contraction => {
                            self.require_initial()?;
                            self.require_horizon()?;
                            match &d.second_initial {
                                Some(s) => s.validate()?,
                                None => return bad("contraction needs diagnostics.second_initial".into()),
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
