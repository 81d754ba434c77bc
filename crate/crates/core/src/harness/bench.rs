//! Wall-clock scaling of the DP estimator.
//!
//! Timings run on a dedicated single-thread pool so the fitted exponents
//! reflect arithmetic work rather than core count. Each point reports the
//! fastest of `repeats` runs.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{dp_moments, Orientation};
use crate::matrix::MeasurementMatrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Row counts for the `P` sweep at fixed `q_fixed`, `n_fixed`.
    pub p_grid: Vec<usize>,
    pub q_fixed: usize,
    pub n_fixed: usize,
    /// Orders for the `n` sweep on a `p_square × p_square` matrix.
    pub n_grid: Vec<usize>,
    pub p_square: usize,
    /// `P` for the orientation comparison on `P × 4P` (and `4P × P`).
    pub p_orientation: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            p_grid: vec![100, 200, 400, 800],
            q_fixed: 200,
            n_fixed: 4,
            n_grid: (2..=8).collect(),
            p_square: 300,
            p_orientation: 150,
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sweep: String,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub orientation: Orientation,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub timings: Vec<Timing>,
    /// Log-log slope of time against `P`.
    pub p_exponent: f64,
    /// Log-log slope of time against `n`.
    pub n_exponent: f64,
    /// `P × 4P` matrix: seconds for each orientation.
    pub wide_asis_s: f64,
    pub wide_transposed_s: f64,
    /// `4P × P` matrix: seconds for each orientation.
    pub tall_asis_s: f64,
    pub tall_transposed_s: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn random_matrix(p: usize, q: usize, seed: u64) -> Result<MeasurementMatrix> {
    let mut r = rng::stream_rng(seed, rng::INPUTS);
    let data = (0..p * q).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    MeasurementMatrix::new(p, q, data)
}

fn time_dp(m: &MeasurementMatrix, n: usize, orientation: Orientation, repeats: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let seq = dp_moments(m, n, orientation)?;
        std::hint::black_box(seq);
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.p_grid.len() < 2 || cfg.n_grid.len() < 2 {
        return Err(Error::precondition("each sweep needs at least two grid points"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::precondition(format!("thread pool: {e}")))?;
    pool.install(|| run_sweeps(cfg))
}

fn run_sweeps(cfg: &BenchConfig) -> Result<BenchReport> {
    let mut timings = Vec::new();
    let mut record = |sweep: &str, m: &MeasurementMatrix, n: usize, o: Orientation| -> Result<f64> {
        let seconds = time_dp(m, n, o, cfg.repeats)?;
        timings.push(Timing { sweep: sweep.into(), p: m.p(), q: m.q(), n, orientation: o, seconds });
        Ok(seconds)
    };

    let mut p_times = Vec::new();
    for &p in &cfg.p_grid {
        let m = random_matrix(p, cfg.q_fixed, cfg.seed)?;
        p_times.push(record("p", &m, cfg.n_fixed, Orientation::AsIs)?);
    }
    let square = random_matrix(cfg.p_square, cfg.p_square, cfg.seed)?;
    let mut n_times = Vec::new();
    for &n in &cfg.n_grid {
        n_times.push(record("n", &square, n, Orientation::AsIs)?);
    }
    let p = cfg.p_orientation;
    let wide = random_matrix(p, 4 * p, cfg.seed)?;
    let wide_asis_s = record("wide", &wide, cfg.n_fixed, Orientation::AsIs)?;
    let wide_transposed_s = record("wide", &wide, cfg.n_fixed, Orientation::Transposed)?;
    let tall = wide.transpose();
    let tall_asis_s = record("tall", &tall, cfg.n_fixed, Orientation::AsIs)?;
    let tall_transposed_s = record("tall", &tall, cfg.n_fixed, Orientation::Transposed)?;

    let ps: Vec<f64> = cfg.p_grid.iter().map(|&v| v as f64).collect();
    let ns: Vec<f64> = cfg.n_grid.iter().map(|&v| v as f64).collect();
    Ok(BenchReport {
        p_exponent: log_log_slope(&ps, &p_times),
        n_exponent: log_log_slope(&ns, &n_times),
        timings,
        wide_asis_s,
        wide_transposed_s,
        tall_asis_s,
        tall_transposed_s,
    })
}

impl BenchReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for t in &self.timings {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }
}
