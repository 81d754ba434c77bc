//! Dense two-phase primal simplex for small linear programs in standard form
//!
//! ```text
//! minimize cᵀx  subject to  Ax = b,  x ≥ 0
//! ```
//!
//! Pivots follow Bland's rule (lowest-index entering column, lowest-index
//! leaving basic variable on ratio ties), so the method cannot cycle and the
//! pivot sequence is a deterministic function of the input.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>()
    }

    /// Runs simplex iterations over columns `0..allowed` until optimal.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_pivots: usize) -> Result<()> {
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Solver(format!("no convergence after {max_pivots} pivots")));
            }
            let entering =
                (0..allowed).filter(|j| !self.basis.contains(j)).find(|&j| self.reduced_cost(cost, j) < -EPS);
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Solver("objective is unbounded below".into()));
            };
            self.pivot(r, c);
        }
    }
}

/// Solves `min cᵀx, Ax = b, x ≥ 0`. `a` is given by rows.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Solver("inconsistent LP dimensions".into()));
    }
    if c.iter().chain(b).chain(a.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LP data".into()));
    }
    let width = n + m;
    let rows = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (row, &rhs))| {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let mut t: Vec<f64> = row.iter().map(|v| sign * v).collect();
            t.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            t.push(sign * rhs);
            t
        })
        .collect();
    let mut tab = Tableau { rows, basis: (n..n + m).collect(), width, pivots: 0 };
    let max_pivots = 50 * (width + 1) * (m + 1);

    // Phase 1: minimize the sum of artificials.
    let phase1: Vec<f64> = (0..width).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1, width, max_pivots)?;
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > 1e-9 * scale {
        return Err(Error::Solver(format!("infeasible (residual {infeasibility:e})")));
    }
    // Drive remaining zero-level artificials out; drop redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.rows[i][j].abs() > EPS) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2 over the original columns.
    let mut cost = c.to_vec();
    cost.resize(width, 0.0);
    tab.optimize(&cost, n, max_pivots)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution { x, objective, pivots: tab.pivots })
}
