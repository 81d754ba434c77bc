//! Replicate summary statistics.

use serde::{Deserialize, Serialize};

use crate::sum::compensated_sum;

pub fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - mu) * (x - mu))) / (xs.len() - 1) as f64
}

pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantile of the sorted sample (`q ∈ [0, 1]`).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn mse(xs: &[f64], truth: f64) -> f64 {
    compensated_sum(xs.iter().map(|x| (x - truth) * (x - truth))) / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    /// Lower and upper ends of the central 50% interval.
    pub q25: f64,
    pub q75: f64,
    pub truth: Option<f64>,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
}

impl Summary {
    pub fn new(xs: &[f64], truth: Option<f64>) -> Self {
        assert!(!xs.is_empty(), "summary of an empty sample");
        let mu = mean(xs);
        Self {
            count: xs.len(),
            mean: mu,
            variance: sample_variance(xs),
            std_error: standard_error(xs),
            q25: quantile(xs, 0.25),
            q75: quantile(xs, 0.75),
            truth,
            bias: truth.map(|t| mu - t),
            mse: truth.map(|t| mse(xs, t)),
        }
    }

    /// `|mean − truth| ≤ k·SE`.
    pub fn within_se(&self, k: f64) -> bool {
        self.bias.is_some_and(|b| b.abs() <= k * self.std_error)
    }

    /// Bias in units of the standard error.
    pub fn z_score(&self) -> Option<f64> {
        self.bias.map(|b| b / self.std_error)
    }
}
