//! Eigenvalue recovery from a moment sequence.
//!
//! A discrete density `p̂` on grid points `s_i ∈ (0, b]` is fitted by linear
//! programming so that its power sums match the normalized moments,
//!
//! ```text
//! minimize Σ_{n≤k} | m̂(n)/d − Σ_i p̂_i s_iⁿ |   over  p̂ ≥ 0, Σ p̂_i = 1
//! ```
//!
//! and `d` eigenvalues are read off its `(d+1)`-quantiles. Dividing by `d`
//! makes the unit-mass density consistent with `m(n) = Σ_{l≤d} λ_lⁿ`.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::analytic::EigenvalueList;
use crate::error::{Error, Result};
use crate::moments::MomentSequence;

pub const DEFAULT_GRID: usize = 200;
pub const DEFAULT_BOUND_FACTOR: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub d: usize,
    pub b: f64,
    pub t_count: usize,
    pub k: usize,
}

impl RecoveryConfig {
    pub fn new(d: usize, b: f64, t_count: usize, k: usize) -> Result<Self> {
        let cfg = Self { d, b, t_count, k };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `b` from [`default_bound`], `T` = [`DEFAULT_GRID`] (at least `d`).
    pub fn with_default_bound(moments: &MomentSequence, d: usize, k: usize) -> Result<Self> {
        Self::new(d, default_bound(moments, k)?, DEFAULT_GRID.max(d), k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::precondition("recovery needs d >= 1 and k >= 1"));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::precondition(format!("upper bound b must be positive, got {}", self.b)));
        }
        if self.t_count < self.d {
            return Err(Error::precondition(format!(
                "grid size {} is smaller than d = {}",
                self.t_count, self.d
            )));
        }
        Ok(())
    }
}

/// `1.2 × max_n m̂(n)^{1/n}` over the first `k` moments with `m̂(n) > 0`.
pub fn default_bound(moments: &MomentSequence, k: usize) -> Result<f64> {
    let top = moments
        .iter()
        .take(k)
        .filter(|&(_, v)| v > 0.0)
        .map(|(n, v)| v.powf(1.0 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::precondition("no positive moment to derive an eigenvalue bound from"));
    }
    Ok(DEFAULT_BOUND_FACTOR * top)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    b: f64,
    objective: f64,
}

impl SpectralGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>, b: f64, objective: f64) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::precondition("grid points and weights must be non-empty and aligned"));
        }
        let ordered = points.windows(2).all(|w| w[0] < w[1]);
        let inside = |v: f64| (0.0..=b).contains(&v);
        if !ordered || !inside(points[0]) || !inside(points[points.len() - 1]) {
            return Err(Error::precondition("grid points must increase strictly within [0, b]"));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::precondition("grid weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::precondition(format!("grid weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights, b, objective })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn t_count(&self) -> usize {
        self.points.len()
    }

    /// LP objective `Σ_n |m̂(n)/d − Σ_i p̂_i s_iⁿ|` at the solution.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// `Σ_i p̂_i s_iⁿ`.
    pub fn moment(&self, n: usize) -> f64 {
        crate::sum::compensated_sum(self.points.iter().zip(&self.weights).map(|(s, p)| p * s.powi(n as i32)))
    }
}

/// Equally spaced points `b·i/T`, `i = 1..=T`.
pub fn grid_points(b: f64, t_count: usize) -> Vec<f64> {
    (1..=t_count).map(|i| b * (i as f64 / t_count as f64)).collect()
}

pub fn fit_density(moments: &MomentSequence, cfg: &RecoveryConfig) -> Result<SpectralGrid> {
    cfg.validate()?;
    if moments.n_max() < cfg.k {
        return Err(Error::precondition(format!(
            "recovery uses k = {} moments but only {} are available",
            cfg.k,
            moments.n_max()
        )));
    }
    let t = cfg.t_count;
    let k = cfg.k;
    let points = grid_points(cfg.b, t);
    // Columns: p_1..p_T, e⁺_1..e⁺_k, e⁻_1..e⁻_k.
    let width = t + 2 * k;
    let mut a = Vec::with_capacity(k + 1);
    let mut rhs = Vec::with_capacity(k + 1);
    for n in 1..=k {
        let mut row = vec![0.0; width];
        for (cell, s) in row.iter_mut().zip(&points) {
            *cell = s.powi(n as i32);
        }
        row[t + n - 1] = 1.0;
        row[t + k + n - 1] = -1.0;
        a.push(row);
        rhs.push(moments.value(n) / cfg.d as f64);
    }
    let mut simplex_row = vec![0.0; width];
    simplex_row[..t].fill(1.0);
    a.push(simplex_row);
    rhs.push(1.0);
    let mut cost = vec![0.0; width];
    cost[t..].fill(1.0);

    let sol = simplex::minimize(&cost, &a, &rhs)?;
    let mut weights = sol.x[..t].to_vec();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Solver("density has no mass".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    SpectralGrid::new(points, weights, cfg.b, sol.objective)
}

/// `λ̂_i` = smallest grid point with cumulative weight ≥ `i/(d+1)`, returned
/// non-increasing.
pub fn extract_eigenvalues(grid: &SpectralGrid, d: usize) -> Result<EigenvalueList> {
    if d == 0 {
        return Err(Error::precondition("d must be at least 1"));
    }
    let mut cumulative = Vec::with_capacity(grid.t_count());
    let mut acc = 0.0;
    for w in grid.weights() {
        acc += w;
        cumulative.push(acc);
    }
    let last = *grid.points().last().expect("non-empty grid");
    let values = (1..=d)
        .map(|i| {
            let level = i as f64 / (d + 1) as f64;
            cumulative.iter().position(|&c| c >= level - 1e-12).map_or(last, |j| grid.points()[j])
        })
        .collect();
    EigenvalueList::new(values)
}

pub fn recover(moments: &MomentSequence, cfg: &RecoveryConfig) -> Result<(SpectralGrid, EigenvalueList)> {
    let grid = fit_density(moments, cfg)?;
    let eig = extract_eigenvalues(&grid, cfg.d)?;
    Ok((grid, eig))
}
