use serde::Serialize;

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchEstimate {
    pub mean: f64,
    pub se: f64,
    pub batches: usize,
}

/// Sample mean and standard error of independent values.
pub fn mean_and_se(values: &[f64]) -> Result<BatchEstimate, MetricError> {
    if values.len() < 2 {
        return Err(MetricError::TooFewPoints { needed: 2, got: values.len() });
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(BatchEstimate {
        mean,
        se: (var / k).sqrt(),
        batches: values.len(),
    })
}

fn batch_values(series: &[f64], batch_count: usize) -> Result<Vec<f64>, MetricError> {
    if batch_count < 2 || series.len() < 2 * batch_count {
        return Err(MetricError::SeriesTooShort {
            len: series.len(),
            batches: batch_count,
        });
    }
    let size = series.len() / batch_count;
    // leftover points are dropped from the start of the series
    let start = series.len() - size * batch_count;
    Ok(series[start..]
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect())
}

/// Non-overlapping batch-means estimate of a stationary mean.
pub fn batch_means(series: &[f64], batch_count: usize) -> Result<BatchEstimate, MetricError> {
    mean_and_se(&batch_values(series, batch_count)?)
}

/// Batch means over several independent series, pooling all batches.
pub fn pooled_batch_means(series: &[Vec<f64>], batches_per_series: usize) -> Result<BatchEstimate, MetricError> {
    let mut all = Vec::new();
    for s in series {
        all.extend(batch_values(s, batches_per_series)?);
    }
    mean_and_se(&all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slope {
    pub slope: f64,
    pub se: f64,
}

impl Slope {
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.slope - z * self.se, self.slope + z * self.se)
    }
}

/// Weighted least-squares slope of `y` on `x` with known standard errors of
/// `y`.
pub fn slope_with_se(x: &[f64], y: &[f64], se: &[f64]) -> Result<Slope, MetricError> {
    if x.len() < 2 || x.len() != y.len() || x.len() != se.len() {
        return Err(MetricError::TooFewPoints { needed: 2, got: x.len().min(y.len()) });
    }
    let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect();
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * (x - xm) * (y - ym)).sum();
    Ok(Slope {
        slope: sxy / sxx,
        se: (1.0 / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_series_has_zero_se() {
        let e = batch_means(&[2.5; 100], 10).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn alternating_series_has_zero_mean() {
        let s: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(batch_means(&s, 20).unwrap().mean, 0.0);
    }

    #[test]
    fn iid_normal_se_matches_clt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = batch_means(&s, 20).unwrap();
        assert!(e.se > 0.01 / 1.5 && e.se < 0.01 * 1.5, "{}", e.se);
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(matches!(batch_means(&[1.0; 9], 5), Err(MetricError::SeriesTooShort { .. })));
    }

    #[test]
    fn slope_of_exact_line() {
        let s = slope_with_se(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], &[0.1, 0.1, 0.1]).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12);
        assert!((s.se - (0.01f64 / 2.0).sqrt()).abs() < 1e-12);
    }
}
