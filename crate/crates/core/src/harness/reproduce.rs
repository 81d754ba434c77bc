//! Replicated experiments producing estimator and eigenvalue tables.
//!
//! | figure | experiment |
//! |--------|------------|
//! | `fig2` | RFF, `d = 5`, `Σ_x = I`, `Σ = 0.25 I`, `300 × 600`, moments `n ≤ 7` |
//! | `fig3left` | linear process, eigenvalue 0.3 ×20, `100 × 100`, recovery from `k = 10` |
//! | `fig3right` | RFF, `d = 1`, `η = 400`, `20 × 20`, recovery of 20 eigenvalues |
//! | `noise_table` | RFF, `d = 3`, `Σ = 0.25 I`, `75 × 15`, noiseless / independent / row-column noise |
//!
//! Dimensions are multiplied by `scale`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytic::{ground_truth_moments, rbf_top_eigenvalues, RbfSpectrumSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate, gram_spectrum, EstimateOptions};
use crate::harness::run_replicates;
use crate::harness::stats::{median, Summary};
use crate::moments::EstimatorKind;
use crate::process::{build_measurements, GenerativeProcess, NoiseModel};
use crate::recovery::{default_bound, recover, RecoveryConfig, DEFAULT_GRID};

pub const DEFAULT_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig2,
    #[serde(rename = "fig3left")]
    Fig3Left,
    #[serde(rename = "fig3right")]
    Fig3Right,
    NoiseTable,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3Left => "fig3left",
            Figure::Fig3Right => "fig3right",
            Figure::NoiseTable => "noise_table",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Figure::Fig2, Figure::Fig3Left, Figure::Fig3Right, Figure::NoiseTable]
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown figure '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproduceConfig {
    pub figure: Figure,
    pub scale: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl ReproduceConfig {
    pub fn new(figure: Figure, scale: f64, replicates: usize, seed: u64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::precondition(format!("scale must lie in (0, 1], got {scale}")));
        }
        if replicates < 2 {
            return Err(Error::precondition("at least two replicates are needed for variances"));
        }
        Ok(Self { figure, scale, replicates, seed })
    }

    fn dim(&self, base: usize, min: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub condition: String,
    pub estimator: String,
    pub n: usize,
    pub mean: f64,
    pub truth: Option<f64>,
    pub bias: Option<f64>,
    pub mse: Option<f64>,
    pub variance: f64,
    pub std_error: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub method: String,
    pub index: usize,
    pub truth: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: String,
    pub median_total_abs_error: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub config: ReproduceConfig,
    pub p: usize,
    pub q: usize,
    pub moments: Vec<MomentRow>,
    pub eigenvalues: Vec<EigenRow>,
    pub errors: Vec<ErrorRow>,
}

impl ReproduceReport {
    pub fn moment_row(&self, condition: &str, estimator: EstimatorKind, n: usize) -> Option<&MomentRow> {
        self.moments.iter().find(|r| r.condition == condition && r.estimator == estimator.name() && r.n == n)
    }

    pub fn error_row(&self, method: &str) -> Option<&ErrorRow> {
        self.errors.iter().find(|r| r.method == method)
    }

    pub fn write_moments_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.moments)
    }

    pub fn write_eigenvalues_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.eigenvalues)
    }

    pub fn write_errors_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rows(writer, &self.errors)
    }
}

fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One experimental condition of a moment table.
pub struct Condition<'a> {
    pub name: &'a str,
    pub process: &'a GenerativeProcess,
    pub noise: NoiseModel,
    pub estimators: &'a [EstimatorKind],
}

/// Replicates `condition` and summarizes every estimator at `n = 1..=n_max`
/// against the process's analytic moments, where known.
pub fn moment_table(
    condition: &Condition<'_>,
    p: usize,
    q: usize,
    n_max: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let opts = EstimateOptions::default();
    let runs = run_replicates(replicates, seed, |_, s| {
        let ms = build_measurements(condition.process, p, q, &condition.noise, s)?;
        condition
            .estimators
            .iter()
            .map(|&k| estimate(k, &ms, n_max, &EstimateOptions { seed: s, ..opts }))
            .collect::<Result<Vec<_>>>()
    })?;
    let truth = ground_truth_moments(condition.process, n_max);
    let mut rows = Vec::new();
    for (e, kind) in condition.estimators.iter().enumerate() {
        for n in 1..=n_max {
            let xs: Vec<f64> = runs.iter().map(|r| r[e].value(n)).collect();
            let s = Summary::new(&xs, truth.as_ref().map(|t| t.value(n)));
            rows.push(MomentRow {
                condition: condition.name.to_string(),
                estimator: kind.name().to_string(),
                n,
                mean: s.mean,
                truth: s.truth,
                bias: s.bias,
                mse: s.mse,
                variance: s.variance,
                std_error: s.std_error,
                q25: s.q25,
                q75: s.q75,
            });
        }
    }
    Ok(rows)
}

pub fn reproduce(cfg: &ReproduceConfig) -> Result<ReproduceReport> {
    match cfg.figure {
        Figure::Fig2 => fig2(cfg),
        Figure::Fig3Left => fig3(cfg, false),
        Figure::Fig3Right => fig3(cfg, true),
        Figure::NoiseTable => noise_table(cfg),
    }
}

fn fig2(cfg: &ReproduceConfig) -> Result<ReproduceReport> {
    let d = 5;
    let process = GenerativeProcess::rff(DMatrix::identity(d, d), DMatrix::identity(d, d) * 0.25)?;
    let (p, q) = (cfg.dim(300, 2), cfg.dim(600, 2));
    let n_max = 7.min(p).min(q);
    let estimators = [EstimatorKind::Naive, EstimatorKind::KvRow, EstimatorKind::KvCol, EstimatorKind::Dp];
    let cond =
        Condition { name: "rff_d5", process: &process, noise: NoiseModel::none(), estimators: &estimators };
    Ok(ReproduceReport {
        config: *cfg,
        p,
        q,
        moments: moment_table(&cond, p, q, n_max, cfg.replicates, cfg.seed)?,
        eigenvalues: Vec::new(),
        errors: Vec::new(),
    })
}

fn noise_table(cfg: &ReproduceConfig) -> Result<ReproduceReport> {
    let d = 3;
    let process = GenerativeProcess::rff(DMatrix::identity(d, d), DMatrix::identity(d, d) * 0.25)?;
    let (p, q) = (cfg.dim(75, 4), cfg.dim(15, 4));
    let n_max = 4.min(p).min(q);
    let single = [EstimatorKind::Naive, EstimatorKind::Dp];
    let alternating = [EstimatorKind::Naive, EstimatorKind::Dp, EstimatorKind::DpAlt2];
    let conditions = [
        Condition { name: "noiseless", process: &process, noise: NoiseModel::none(), estimators: &single },
        Condition {
            name: "independent",
            process: &process,
            noise: NoiseModel::independent(1.0, 1),
            estimators: &single,
        },
        Condition {
            name: "row_column",
            process: &process,
            noise: NoiseModel::row_column(1.0, 2),
            estimators: &alternating,
        },
    ];
    let mut moments = Vec::new();
    for (i, c) in conditions.iter().enumerate() {
        let seed = crate::rng::derive_seed(cfg.seed, 1000 + i as u64);
        moments.extend(moment_table(c, p, q, n_max, cfg.replicates, seed)?);
    }
    Ok(ReproduceReport { config: *cfg, p, q, moments, eigenvalues: Vec::new(), errors: Vec::new() })
}

const METHODS: [&str; 3] = ["ours", "kv", "svd"];

fn fig3(cfg: &ReproduceConfig, rbf: bool) -> Result<ReproduceReport> {
    let k = 10;
    let (process, p, q, d_rec, truth) = if rbf {
        let process = GenerativeProcess::rff(DMatrix::identity(1, 1), DMatrix::identity(1, 1) / 400.0)?;
        let (p, q) = (cfg.dim(20, k), cfg.dim(20, k));
        let spec = RbfSpectrumSpec::from_covariances(process.sigma_x(), process.sigma())?;
        let truth = rbf_top_eigenvalues(&spec, p)?.values().to_vec();
        (process, p, q, p, truth)
    } else {
        let d = 20;
        let process = GenerativeProcess::linear(d, 0.3f64.sqrt())?;
        let (p, q) = (cfg.dim(100, k), cfg.dim(100, k));
        (process, p, q, d, vec![0.3; d])
    };
    let opts = EstimateOptions::default();
    let runs = run_replicates(cfg.replicates, cfg.seed, |_, s| {
        let ms = build_measurements(&process, p, q, &NoiseModel::none(), s)?;
        let dp = estimate(EstimatorKind::Dp, &ms, k, &opts)?;
        let kv = estimate(EstimatorKind::KvRow, &ms, k, &opts)?;
        let mut out = Vec::with_capacity(3);
        for m in [&dp, &kv] {
            let rc = if rbf {
                RecoveryConfig::new(d_rec, default_bound(m, k)?, DEFAULT_GRID.max(d_rec), k)?
            } else {
                RecoveryConfig::new(d_rec, 1.0, DEFAULT_GRID, k)?
            };
            out.push(recover(m, &rc)?.1.values().to_vec());
        }
        let mut svd: Vec<f64> = gram_spectrum(&ms[0]).into_iter().take(d_rec).collect();
        svd.resize(d_rec, 0.0);
        out.push(svd);
        Ok(out)
    })?;

    let mut eigenvalues = Vec::new();
    let mut errors = Vec::new();
    for (mi, method) in METHODS.iter().enumerate() {
        for (i, &t) in truth.iter().enumerate() {
            let xs: Vec<f64> = runs.iter().map(|r| r[mi][i]).collect();
            let s = Summary::new(&xs, Some(t));
            eigenvalues.push(EigenRow {
                method: method.to_string(),
                index: i + 1,
                truth: t,
                median: median(&xs),
                q25: s.q25,
                q75: s.q75,
            });
        }
        let totals: Vec<f64> =
            runs.iter().map(|r| r[mi].iter().zip(&truth).map(|(a, b)| (a - b).abs()).sum()).collect();
        let s = Summary::new(&totals, None);
        errors.push(ErrorRow {
            method: method.to_string(),
            median_total_abs_error: median(&totals),
            q25: s.q25,
            q75: s.q75,
        });
    }
    Ok(ReproduceReport { config: *cfg, p, q, moments: Vec::new(), eigenvalues, errors })
}
