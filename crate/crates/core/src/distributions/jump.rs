use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::{DistributionError, Result};

fn normalize_default() -> bool {
    true
}

/// Declarative description of a jump-size law. With `normalize` (the
/// default) space is rescaled so the mean jump is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpSpec {
    Exponential {
        rate: f64,
        #[serde(default = "normalize_default")]
        normalize: bool,
    },
    Gamma {
        shape: f64,
        rate: f64,
        #[serde(default = "normalize_default")]
        normalize: bool,
    },
    Uniform {
        a: f64,
        b: f64,
        #[serde(default = "normalize_default")]
        normalize: bool,
    },
    /// Piecewise-linear CDF through `(y[i], cdf[i])`.
    Table {
        y: Vec<f64>,
        cdf: Vec<f64>,
        #[serde(default = "normalize_default")]
        normalize: bool,
    },
}

impl JumpSpec {
    pub fn exponential(rate: f64) -> Self {
        JumpSpec::Exponential { rate, normalize: true }
    }

    fn normalize(&self) -> bool {
        match self {
            JumpSpec::Exponential { normalize, .. }
            | JumpSpec::Gamma { normalize, .. }
            | JumpSpec::Uniform { normalize, .. }
            | JumpSpec::Table { normalize, .. } => *normalize,
        }
    }
}

/// Concrete family with the parameters actually in use (after rescaling).
#[derive(Debug, Clone, PartialEq)]
pub enum JumpFamily {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { a: f64, b: f64 },
    Table { y: Vec<f64>, cdf: Vec<f64>, primitive: Vec<f64> },
}

/// `E Z^order` for `Z ~ Gamma(shape, rate)`; a rising factorial for small
/// integer orders so that normalized laws have mean exactly 1.
fn gamma_moment(shape: f64, rate: f64, order: f64) -> f64 {
    if order.fract() == 0.0 && order <= 32.0 {
        (0..order as u32).map(|k| (shape + k as f64) / rate).product()
    } else {
        (ln_gamma(shape + order) - ln_gamma(shape) - order * rate.ln()).exp()
    }
}

/// Distribution of the (strictly positive) jump size `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLaw {
    family: JumpFamily,
    spec: JumpSpec,
    scale: f64,
}

impl JumpLaw {
    pub fn new(spec: &JumpSpec) -> Result<Self> {
        let raw = match spec {
            JumpSpec::Exponential { rate, .. } => {
                check_finite(&[*rate])?;
                if *rate <= 0.0 {
                    return Err(DistributionError::InfiniteMean);
                }
                JumpFamily::Exponential { rate: *rate }
            }
            JumpSpec::Gamma { shape, rate, .. } => {
                check_finite(&[*shape, *rate])?;
                if *shape <= 0.0 {
                    return Err(DistributionError::InvalidParameter(format!(
                        "gamma shape must be positive, got {shape}"
                    )));
                }
                if *rate <= 0.0 {
                    return Err(DistributionError::InfiniteMean);
                }
                JumpFamily::Gamma { shape: *shape, rate: *rate }
            }
            JumpSpec::Uniform { a, b, .. } => {
                check_finite(&[*a, *b])?;
                if *a <= 0.0 || *b <= *a {
                    return Err(DistributionError::InvalidParameter(format!(
                        "uniform jump law needs 0 < a < b, got a = {a}, b = {b}"
                    )));
                }
                JumpFamily::Uniform { a: *a, b: *b }
            }
            JumpSpec::Table { y, cdf, .. } => table_family(y, cdf, 1.0)?,
        };
        let mut law = JumpLaw {
            family: raw,
            spec: spec.clone(),
            scale: 1.0,
        };
        if spec.normalize() {
            let mean = law.moment(1.0)?;
            if !mean.is_finite() {
                return Err(DistributionError::InfiniteMean);
            }
            law.family = law.rescaled(1.0 / mean)?;
            law.scale = 1.0 / mean;
        }
        Ok(law)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(&JumpSpec::exponential(rate))
    }

    /// The spec this law was built from (raw, un-normalized parameters).
    pub fn spec(&self) -> &JumpSpec {
        &self.spec
    }

    pub fn family(&self) -> &JumpFamily {
        &self.family
    }

    /// Factor applied to raw jump sizes by normalization.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn rescaled(&self, c: f64) -> Result<JumpFamily> {
        Ok(match &self.family {
            JumpFamily::Exponential { rate } => JumpFamily::Exponential { rate: rate / c },
            JumpFamily::Gamma { shape, rate } => JumpFamily::Gamma { shape: *shape, rate: rate / c },
            JumpFamily::Uniform { a, b } => JumpFamily::Uniform { a: a * c, b: b * c },
            JumpFamily::Table { y, cdf, .. } => table_family(y, cdf, c)?,
        })
    }

    /// `J(y) = P(Z <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.family {
            JumpFamily::Exponential { rate } => -(-rate * y).exp_m1(),
            JumpFamily::Gamma { shape, rate } => gamma_lr(*shape, rate * y),
            JumpFamily::Uniform { a, b } => ((y - a) / (b - a)).clamp(0.0, 1.0),
            JumpFamily::Table { y: ys, cdf, .. } => {
                if y >= *ys.last().unwrap() {
                    return 1.0;
                }
                let i = ys.partition_point(|&v| v <= y).saturating_sub(1);
                let t = (y - ys[i]) / (ys[i + 1] - ys[i]);
                cdf[i] + t * (cdf[i + 1] - cdf[i])
            }
        }
    }

    /// `1 - J(y)`, computed literally from [`Self::cdf`].
    pub fn ccdf(&self, y: f64) -> f64 {
        1.0 - self.cdf(y)
    }

    /// Density `J'(y)`.
    pub fn density(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match &self.family {
            JumpFamily::Exponential { rate } => rate * (-rate * y).exp(),
            JumpFamily::Gamma { shape, rate } => {
                if y == 0.0 {
                    return match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => *rate,
                        _ => 0.0,
                    };
                }
                (shape * rate.ln() + (shape - 1.0) * y.ln() - rate * y - ln_gamma(*shape)).exp()
            }
            JumpFamily::Uniform { a, b } => {
                if y >= *a && y <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            JumpFamily::Table { y: ys, cdf, .. } => {
                if y >= *ys.last().unwrap() || y < ys[0] {
                    return 0.0;
                }
                let i = ys.partition_point(|&v| v <= y).saturating_sub(1);
                (cdf[i + 1] - cdf[i]) / (ys[i + 1] - ys[i])
            }
        }
    }

    /// `integral of (1 - J) over [lo, hi]`, with `1 - J = 1` on the negative axis.
    pub fn ccdf_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if lo < 0.0 {
            return (hi.min(0.0) - lo) + self.ccdf_integral(0.0, hi.max(0.0));
        }
        match &self.family {
            JumpFamily::Exponential { rate } => ((-rate * lo).exp() - (-rate * hi).exp()) / rate,
            _ => self.ccdf_primitive(hi) - self.ccdf_primitive(lo),
        }
    }

    /// `integral of (1 - J) over [0, y]` for `y >= 0`.
    fn ccdf_primitive(&self, y: f64) -> f64 {
        match &self.family {
            JumpFamily::Exponential { rate } => -(-rate * y).exp_m1() / rate,
            JumpFamily::Gamma { .. } if y <= 0.0 => 0.0,
            JumpFamily::Gamma { shape, rate } => {
                y * gamma_ur(*shape, rate * y) + shape / rate * gamma_lr(shape + 1.0, rate * y)
            }
            JumpFamily::Uniform { a, b } => {
                if y <= *a {
                    y
                } else if y <= *b {
                    a + ((b - a).powi(2) - (b - y).powi(2)) / (2.0 * (b - a))
                } else {
                    0.5 * (a + b)
                }
            }
            JumpFamily::Table { y: ys, cdf, primitive } => {
                if y <= ys[0] {
                    return y;
                }
                if y >= *ys.last().unwrap() {
                    return *primitive.last().unwrap();
                }
                let i = ys.partition_point(|&v| v <= y).saturating_sub(1);
                let here = 1.0 - self.cdf(y);
                primitive[i] + 0.5 * (y - ys[i]) * ((1.0 - cdf[i]) + here)
            }
        }
    }

    /// `m^(l) = E Z^l`; `+inf` when the moment diverges.
    pub fn moment(&self, order: f64) -> Result<f64> {
        if !(order >= 0.0) {
            return Err(DistributionError::InvalidParameter(format!(
                "moment order must be non-negative, got {order}"
            )));
        }
        if order == 0.0 {
            return Ok(1.0);
        }
        Ok(match &self.family {
            JumpFamily::Exponential { rate } => gamma_moment(1.0, *rate, order),
            JumpFamily::Gamma { shape, rate } => gamma_moment(*shape, *rate, order),
            JumpFamily::Uniform { a, b } => {
                (b.powf(order + 1.0) - a.powf(order + 1.0)) / ((order + 1.0) * (b - a))
            }
            JumpFamily::Table { y, cdf, .. } => y
                .windows(2)
                .zip(cdf.windows(2))
                .map(|(ys, cs)| {
                    let dens = (cs[1] - cs[0]) / (ys[1] - ys[0]);
                    dens * (ys[1].powf(order + 1.0) - ys[0].powf(order + 1.0)) / (order + 1.0)
                })
                .sum(),
        })
    }

    /// Draws one jump size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            JumpFamily::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            JumpFamily::Gamma { shape, rate } => Gamma::new(*shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            JumpFamily::Uniform { a, b } => rng.random_range(*a..*b),
            JumpFamily::Table { y, cdf, .. } => {
                let u: f64 = rng.random();
                let i = cdf
                    .partition_point(|&c| c <= u)
                    .clamp(1, cdf.len() - 1);
                let t = (u - cdf[i - 1]) / (cdf[i] - cdf[i - 1]);
                y[i - 1] + t * (y[i] - y[i - 1])
            }
        }
    }

    /// Whether the density exists and is bounded away from zero on every
    /// compact `[0, Y]`, the condition under which the traveling wave is
    /// unique up to shifts.
    pub fn satisfies_density_condition(&self) -> bool {
        match &self.family {
            JumpFamily::Exponential { .. } => true,
            JumpFamily::Gamma { shape, .. } => *shape <= 1.0,
            JumpFamily::Uniform { .. } | JumpFamily::Table { .. } => false,
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DistributionError::InvalidParameter("parameters must be finite".into()))
    }
}

fn table_family(y: &[f64], cdf: &[f64], scale: f64) -> Result<JumpFamily> {
    if y.len() != cdf.len() || y.len() < 2 {
        return Err(DistributionError::InvalidParameter(
            "jump table needs at least two (y, cdf) points of equal length".into(),
        ));
    }
    check_finite(y)?;
    check_finite(cdf)?;
    if y[0] < 0.0 || y.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DistributionError::InvalidParameter(
            "jump table abscissae must be non-negative and strictly increasing".into(),
        ));
    }
    if cdf[0] > 0.0 {
        return Err(DistributionError::AtomAtZero(cdf[0]));
    }
    if cdf[0] < 0.0 || *cdf.last().unwrap() != 1.0 || cdf.windows(2).any(|w| w[1] < w[0]) {
        return Err(DistributionError::InvalidParameter(
            "jump table CDF must rise from 0 to 1 without decreasing".into(),
        ));
    }
    let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
    let mut primitive = vec![y[0]];
    for i in 0..y.len() - 1 {
        let prev = primitive[i];
        primitive.push(prev + 0.5 * (y[i + 1] - y[i]) * ((1.0 - cdf[i]) + (1.0 - cdf[i + 1])));
    }
    Ok(JumpFamily::Table {
        y,
        cdf: cdf.to_vec(),
        primitive,
    })
}
