//! The jump kernel on the grid and its discrete convolution with
//! `H`-increments.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::distributions::JumpLaw;

/// How `1 - J` is sampled into the weights `w_m` that move mass from node
/// `j` past node `j + m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelPlacement {
    /// `w_m = (1/dx) integral of (1 - J) over [m dx, (m+1) dx]`. Equivalent
    /// to exact jumps whose landing mass is split linearly between the two
    /// enclosing nodes, so the mean moves at exactly the speed `H(1)`.
    #[default]
    CellAverage,
    /// `w_m = 1 - J(m dx)`, the quantile cell placed at its left node.
    Node,
    /// `w_m = 1 - J((m + 1/2) dx)`.
    Midpoint,
}

pub fn kernel_weights(law: &JumpLaw, placement: KernelPlacement, dx: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|m| {
            let a = m as f64 * dx;
            match placement {
                KernelPlacement::CellAverage => law.ccdf_integral(a, a + dx) / dx,
                KernelPlacement::Node => {
                    if m == 0 {
                        1.0
                    } else {
                        law.ccdf(a)
                    }
                }
                KernelPlacement::Midpoint => law.ccdf(a + 0.5 * dx),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionMethod {
    Direct,
    Fft,
    /// FFT above [`FFT_THRESHOLD`] nodes.
    #[default]
    Auto,
}

pub const FFT_THRESHOLD: usize = 256;

/// Computes `out_k = sum_(j <= k) a_j w_(k-j)` for a fixed kernel `w`.
#[derive(Clone)]
pub struct Convolver {
    weights: Vec<f64>,
    fft: Option<FftPlan>,
}

#[derive(Clone)]
struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
    size: usize,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("len", &self.weights.len())
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

impl Convolver {
    pub fn new(weights: Vec<f64>, method: ConvolutionMethod) -> Self {
        let use_fft = match method {
            ConvolutionMethod::Direct => false,
            ConvolutionMethod::Fft => true,
            ConvolutionMethod::Auto => weights.len() > FFT_THRESHOLD,
        };
        let fft = use_fft.then(|| {
            let size = (2 * weights.len() - 1).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut kernel_hat: Vec<Complex<f64>> = weights.iter().map(|&w| Complex::new(w, 0.0)).collect();
            kernel_hat.resize(size, Complex::new(0.0, 0.0));
            forward.process(&mut kernel_hat);
            FftPlan {
                forward,
                inverse,
                kernel_hat,
                size,
            }
        });
        Self { weights, fft }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, a: &[f64], out: &mut [f64]) {
        assert_eq!(a.len(), self.weights.len());
        assert_eq!(out.len(), self.weights.len());
        match &self.fft {
            Some(plan) => {
                let mut buf: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
                buf.resize(plan.size, Complex::new(0.0, 0.0));
                plan.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&plan.kernel_hat) {
                    *b *= k;
                }
                plan.inverse.process(&mut buf);
                let scale = 1.0 / plan.size as f64;
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re * scale;
                }
            }
            None => direct(a, &self.weights, out),
        }
    }
}

pub(crate) fn direct(a: &[f64], w: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = a[..=k].iter().zip(w[..=k].iter().rev()).map(|(x, y)| x * y).sum();
    }
}
