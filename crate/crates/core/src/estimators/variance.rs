//! Variance bound for the increasing-path estimator and the matching
//! Chebyshev error radius.
//!
//! `Var m̂(n) ≤ (1/P + 1/Q) f(n)` with `f(n) = n² Var(Π_i φ(x_i,w_i) φ(x_{i+1},w_i))`
//! over iid tuples, `x_{n+1} = x_1`.

use crate::error::{Error, Result};
use crate::process::GenerativeProcess;
use crate::rng;

pub fn variance_bound(_n: usize, p: usize, q: usize, f_n: f64) -> Result<f64> {
    if f_n.is_nan() || f_n < 0.0 {
        return Err(Error::precondition(format!("f(n) must be nonnegative, got {f_n}")));
    }
    if p == 0 || q == 0 {
        return Err(Error::precondition("P and Q must be positive"));
    }
    Ok((1.0 / p as f64 + 1.0 / q as f64) * f_n)
}

/// Monte-Carlo estimate of `f(n)` from `samples` fresh tuples
/// `(x_1..x_n, w_1..w_n)` drawn from stream `tuples(n)` of `seed`.
pub fn estimate_f(process: &GenerativeProcess, n: usize, samples: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::precondition("order must be at least 1"));
    }
    if samples < 2 {
        return Err(Error::precondition("estimate_f needs at least two samples"));
    }
    let mut rng = rng::stream_rng(seed, rng::tuples(n));
    // Welford's running mean and sum of squared deviations.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for k in 0..samples {
        xs.clear();
        ws.clear();
        for _ in 0..n {
            xs.push(process.draw_input(&mut rng));
        }
        for _ in 0..n {
            ws.push(process.draw_feature(&mut rng));
        }
        let prod: f64 = (0..n)
            .map(|i| process.phi_unchecked(&xs[i], &ws[i]) * process.phi_unchecked(&xs[(i + 1) % n], &ws[i]))
            .product();
        let delta = prod - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (prod - mean);
    }
    Ok((n * n) as f64 * m2 / (samples - 1) as f64)
}

/// Radius `sqrt(f(n)/δ · (1/P + 1/Q))` holding with probability at least `1 − δ`.
pub fn chebyshev_error(n: usize, p: usize, q: usize, f_n: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((variance_bound(n, p, q, f_n)? / delta).sqrt())
}
