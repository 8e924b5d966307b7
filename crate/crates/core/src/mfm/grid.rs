use serde::{Deserialize, Serialize};

use crate::metrics::AtomicCdf;

use super::{MfmError, Result};

/// A CDF sampled on the uniform grid `x_k = x0 + k dx`, `k = 0..=K`.
///
/// The represented distribution is discrete: node `x_k` carries the mass
/// `F_k - F_(k-1)`, node `x0` also carries everything below it, and the
/// missing mass `1 - F_K` is lumped onto `x_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCdf {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl GridCdf {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !x0.is_finite() {
            return Err(MfmError::InvalidGrid(format!("x0 = {x0}, dx = {dx}")));
        }
        if values.len() < 2 {
            return Err(MfmError::InvalidGrid("a grid needs at least two nodes".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(MfmError::InvalidGrid("values must be non-decreasing in [0, 1]".into()));
        }
        Ok(Self { x0, dx, values })
    }

    pub(crate) fn from_raw(x0: f64, dx: f64, values: Vec<f64>) -> Self {
        Self { x0, dx, values }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Mass at or below `x0`.
    pub fn tail_left(&self) -> f64 {
        self.values[0]
    }

    /// Mass beyond the last node.
    pub fn tail_right(&self) -> f64 {
        1.0 - self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, m)| x * m).sum()
    }

    /// `F(x)` of the represented step CDF.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        let k = ((x - self.x0) / self.dx + 1e-9).floor() as usize;
        self.values[k.min(self.values.len() - 1)]
    }

    /// The same values on the grid moved by `offset`.
    pub fn translated(&self, offset: f64) -> Self {
        Self {
            x0: self.x0 + offset,
            ..self.clone()
        }
    }

    /// Divided by `F_K`, so that no mass is left beyond the last node.
    pub fn normalized(&self) -> Self {
        let total = self.values[self.values.len() - 1];
        let mut values: Vec<f64> = self.values.iter().map(|v| v / total).collect();
        *values.last_mut().expect("non-empty") = 1.0;
        Self { values, ..*self }
    }

    /// Translated to mean zero.
    pub fn recentered(&self) -> Self {
        self.translated(-self.mean())
    }
}

impl AtomicCdf for GridCdf {
    fn atoms(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        let last = self.values.len() - 1;
        Box::new((0..=last).map(move |k| {
            let below = if k == 0 { 0.0 } else { self.values[k - 1] };
            let extra = if k == last { 1.0 - self.values[k] } else { 0.0 };
            (self.x(k), self.values[k] - below + extra)
        }))
    }

    fn lumped_tail(&self) -> f64 {
        self.tail_left() + self.tail_right()
    }
}

/// Initial distributions understood by the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Dirac { at: f64 },
    Uniform { a: f64, b: f64 },
    /// Equal atoms at the listed points.
    Empirical { points: Vec<f64> },
    /// Piecewise-linear CDF through `(x, cdf)`, 0 before and 1 after.
    Table { x: Vec<f64>, cdf: Vec<f64> },
    /// Two exponential tails meeting at `center`.
    Laplace { center: f64, scale: f64 },
}

impl InitialSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MfmError::InvalidInitial(m));
        match self {
            InitialSpec::Dirac { at } if !at.is_finite() => bad(format!("dirac at {at}")),
            InitialSpec::Uniform { a, b } if !(a < b && a.is_finite() && b.is_finite()) => {
                bad(format!("uniform needs a < b, got {a}, {b}"))
            }
            InitialSpec::Empirical { points } if points.is_empty() || points.iter().any(|p| !p.is_finite()) => {
                bad("empirical needs finite points".into())
            }
            InitialSpec::Table { x, cdf } => {
                let ok = x.len() >= 2
                    && x.len() == cdf.len()
                    && x.windows(2).all(|w| w[0] < w[1])
                    && cdf.windows(2).all(|w| w[0] <= w[1])
                    && cdf.first() == Some(&0.0)
                    && cdf.last() == Some(&1.0);
                if ok {
                    Ok(())
                } else {
                    bad("table needs increasing x and a CDF from 0 to 1".into())
                }
            }
            InitialSpec::Laplace { center, scale } if !(center.is_finite() && *scale > 0.0) => {
                bad(format!("laplace needs a positive scale, got {scale}"))
            }
            _ => Ok(()),
        }
    }

    /// `P(X <= x)` with the right-continuous convention.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            InitialSpec::Dirac { at } => f64::from(u8::from(x >= *at)),
            InitialSpec::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            InitialSpec::Empirical { points } => {
                points.iter().filter(|&&p| p <= x).count() as f64 / points.len() as f64
            }
            InitialSpec::Table { x: xs, cdf } => {
                if x < xs[0] {
                    0.0
                } else if x >= xs[xs.len() - 1] {
                    1.0
                } else {
                    let i = xs.partition_point(|&v| v <= x) - 1;
                    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                    cdf[i] + t * (cdf[i + 1] - cdf[i])
                }
            }
            InitialSpec::Laplace { center, scale } => {
                let z = (x - center) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) >= u }` for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        match self {
            InitialSpec::Dirac { at } => *at,
            InitialSpec::Uniform { a, b } => a + u * (b - a),
            InitialSpec::Empirical { points } => {
                let mut sorted = points.clone();
                sorted.sort_by(f64::total_cmp);
                let i = ((u * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
                sorted[i - 1]
            }
            InitialSpec::Table { x, cdf } => {
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                x[i - 1] + (u - c0) / (c1 - c0) * (x[i] - x[i - 1])
            }
            InitialSpec::Laplace { center, scale } => {
                if u < 0.5 {
                    center + scale * (2.0 * u).ln()
                } else {
                    center - scale * (2.0 * (1.0 - u)).ln()
                }
            }
        }
    }

    /// `n` points at the quantiles `(i - 1/2) / n`.
    pub fn quantile_points(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).collect()
    }

    pub fn mean(&self) -> f64 {
        match self {
            InitialSpec::Dirac { at } => *at,
            InitialSpec::Uniform { a, b } => 0.5 * (a + b),
            InitialSpec::Empirical { points } => points.iter().sum::<f64>() / points.len() as f64,
            InitialSpec::Table { x, cdf } => x
                .windows(2)
                .zip(cdf.windows(2))
                .map(|(xs, cs)| (cs[1] - cs[0]) * 0.5 * (xs[0] + xs[1]))
                .sum(),
            InitialSpec::Laplace { center, .. } => *center,
        }
    }
}

/// Placement of a solver window: nodes `center - half_width + k dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridWindow {
    pub center: f64,
    pub half_width: f64,
    pub dx: f64,
}

impl GridWindow {
    pub fn nodes(&self) -> usize {
        (2.0 * self.half_width / self.dx).round() as usize + 1
    }
}

/// Samples `spec` on `window`. Each node receives the mass of the cell of
/// width `dx` centred on it, so atoms snap to the nearest node and the mean
/// of a continuous law is kept to second order.
pub fn grid_cdf_from_spec(spec: &InitialSpec, window: GridWindow, eps_tail: f64) -> Result<GridCdf> {
    spec.validate()?;
    if !(window.dx > 0.0 && window.half_width > window.dx) {
        return Err(MfmError::InvalidGrid(format!(
            "half width {} and dx {}",
            window.half_width, window.dx
        )));
    }
    let n = window.nodes();
    let x0 = window.center - window.half_width;
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let edge = x0 + (k as f64 + 0.5) * window.dx;
            // rounding tolerance so that atoms sitting exactly on a cell edge
            // land on the node to their right consistently
            spec.cdf(edge - 1e-9 * window.dx).clamp(0.0, 1.0)
        })
        .collect();
    let mut values = values;
    for k in 1..n {
        if values[k] < values[k - 1] {
            values[k] = values[k - 1];
        }
    }
    let grid = GridCdf::from_raw(x0, window.dx, values);
    if grid.tail_left() > eps_tail || grid.tail_right() > eps_tail {
        return Err(MfmError::WindowTooSmall {
            tail_left: grid.tail_left(),
            tail_right: grid.tail_right(),
        });
    }
    Ok(grid)
}
