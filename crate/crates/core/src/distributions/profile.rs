use serde::{Deserialize, Serialize};

use super::{DistributionError, Result};

/// Declarative description of an acceptance profile, as found in experiment
/// configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `eta(nu) = 1 - nu`.
    Linear,
    /// `eta(nu) = 1 - nu^p`.
    Power { p: f64 },
    /// Piecewise-linear interpolation through `(nu[i], eta[i])`.
    Table { nu: Vec<f64>, eta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Linear,
    Power { p: f64 },
    Table { nu: Vec<f64>, eta: Vec<f64>, area: Vec<f64> },
}

/// Acceptance probability as a function of a particle's quantile.
///
/// `eta` is continuous and strictly decreasing from `eta(0) = 1` to
/// `eta(1) = 0`. The finite-`n` version is the step function
/// `eta_n(nu) = eta(ceil(n nu) / n)` on `(0, 1]` with `eta_n(0) = 1`, which is
/// constant on every rank interval `((l-1)/n, l/n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    shape: Shape,
    spec: ProfileSpec,
}

impl RateProfile {
    pub fn new(spec: &ProfileSpec) -> Result<Self> {
        let shape = match spec {
            ProfileSpec::Linear => Shape::Linear,
            ProfileSpec::Power { p } => {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(DistributionError::InvalidParameter(format!(
                        "power exponent must be positive and finite, got {p}"
                    )));
                }
                Shape::Power { p: *p }
            }
            ProfileSpec::Table { nu, eta } => table_shape(nu, eta)?,
        };
        Ok(Self {
            shape,
            spec: spec.clone(),
        })
    }

    pub fn linear() -> Self {
        Self::new(&ProfileSpec::Linear).expect("linear profile is valid")
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(&ProfileSpec::Power { p })
    }

    pub fn table(nu: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        Self::new(&ProfileSpec::Table { nu, eta })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    /// `eta(nu)`, with `nu` clamped to `[0, 1]`.
    pub fn eta(&self, nu: f64) -> f64 {
        let nu = nu.clamp(0.0, 1.0);
        match &self.shape {
            Shape::Linear => 1.0 - nu,
            Shape::Power { p } => 1.0 - nu.powf(*p),
            Shape::Table { nu: xs, eta: ys, .. } => {
                let i = segment(xs, nu);
                let t = (nu - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }

    /// `H(nu) = integral of eta over [0, nu]`, with `nu` clamped to `[0, 1]`.
    pub fn antiderivative(&self, nu: f64) -> f64 {
        let nu = nu.clamp(0.0, 1.0);
        match &self.shape {
            Shape::Linear => nu - 0.5 * nu * nu,
            Shape::Power { p } => nu - nu.powf(p + 1.0) / (p + 1.0),
            Shape::Table {
                nu: xs,
                eta: ys,
                area,
            } => {
                let i = segment(xs, nu);
                area[i] + 0.5 * (nu - xs[i]) * (ys[i] + self.eta(nu))
            }
        }
    }

    /// Wave speed `v = H(1)`.
    pub fn speed(&self) -> f64 {
        match &self.shape {
            Shape::Linear => 0.5,
            Shape::Power { p } => p / (p + 1.0),
            Shape::Table { area, .. } => *area.last().expect("table has segments"),
        }
    }

    /// Acceptance probability of the particle holding rank `rank` (1-based)
    /// among `n`, i.e. `eta_n(rank / n)`.
    pub fn eta_rank(&self, n: usize, rank: usize) -> f64 {
        debug_assert!(rank <= n);
        if rank == 0 {
            return 1.0;
        }
        if rank == n {
            return self.eta(1.0);
        }
        self.eta(rank as f64 / n as f64)
    }

    /// Step version `eta_n(nu)`.
    pub fn eta_n(&self, n: usize, nu: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(DistributionError::QuantileOutOfRange(nu));
        }
        if n == 0 {
            return Err(DistributionError::InvalidParameter(
                "particle count must be positive".into(),
            ));
        }
        Ok(self.eta_rank(n, rank_of(n, nu)))
    }

    /// Largest deviation `|eta_n - eta|` over `samples + 1` equally spaced
    /// quantiles.
    pub fn step_sup_error(&self, n: usize, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                let nu = i as f64 / samples as f64;
                (self.eta_rank(n, rank_of(n, nu)) - self.eta(nu)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Rank `l` such that `nu` lies in `((l-1)/n, l/n]`; 0 for `nu = 0`.
pub(crate) fn rank_of(n: usize, nu: f64) -> usize {
    if nu <= 0.0 {
        return 0;
    }
    let r = nu * n as f64;
    // absorb rounding in products like (2/3) * 3
    let l = (r - 1e-9 * r.max(1.0)).ceil().max(1.0) as usize;
    l.min(n)
}

fn segment(xs: &[f64], nu: f64) -> usize {
    let i = xs.partition_point(|&x| x <= nu);
    i.saturating_sub(1).min(xs.len() - 2)
}

fn table_shape(nu: &[f64], eta: &[f64]) -> Result<Shape> {
    if nu.len() != eta.len() || nu.len() < 2 {
        return Err(DistributionError::InvalidParameter(
            "table needs at least two (nu, eta) points of equal length".into(),
        ));
    }
    if nu.iter().chain(eta).any(|v| !v.is_finite()) {
        return Err(DistributionError::InvalidParameter(
            "table entries must be finite".into(),
        ));
    }
    if nu[0] != 0.0 || *nu.last().unwrap() != 1.0 || nu.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DistributionError::InvalidParameter(
            "table quantiles must increase strictly from 0 to 1".into(),
        ));
    }
    if let Some(i) = eta.windows(2).position(|w| w[1] >= w[0]) {
        return Err(DistributionError::NotStrictlyDecreasing { index: i + 1 });
    }
    let (at_zero, at_one) = (eta[0], *eta.last().unwrap());
    if at_zero != 1.0 || at_one != 0.0 {
        return Err(DistributionError::BoundaryViolation { at_zero, at_one });
    }
    let mut area = Vec::with_capacity(nu.len());
    area.push(0.0);
    for i in 0..nu.len() - 1 {
        let prev = area[i];
        area.push(prev + 0.5 * (nu[i + 1] - nu[i]) * (eta[i] + eta[i + 1]));
    }
    Ok(Shape::Table {
        nu: nu.to_vec(),
        eta: eta.to_vec(),
        area,
    })
}
