//! Cyclic-path averages by direct enumeration, and the closed form for `n = 2`.
//!
//! A cyclic path of order `n` picks rows `i_1..i_n` and columns `α_1..α_n` and
//! multiplies `Π_l Φ[i_l, α_l] Φ[i_{l+1}, α_l]` with `i_{n+1} = i_1`. The
//! enumerators here are exponential-time oracles for testing; they refuse to
//! run past an explicit term budget.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::estimators::naive::{feature_gram_matrix, gram_matrix, naive_moments};
use crate::matrix::MeasurementMatrix;
use crate::sum::{binomial, compensated_sum, Compensated};

pub const DEFAULT_BUDGET: u128 = 10_000_000;

fn path_product(m: &MeasurementMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let n = rows.len();
    (0..n).map(|l| m.get(rows[l], cols[l]) * m.get(rows[(l + 1) % n], cols[l])).product()
}

fn check_order(m: &MeasurementMatrix, n: usize) -> Result<()> {
    if n == 0 || n > m.p() || n > m.q() {
        return Err(Error::precondition(format!(
            "order {n} has no disjoint path in a {}x{} matrix",
            m.p(),
            m.q()
        )));
    }
    Ok(())
}

fn check_budget(count: f64, budget: u128) -> Result<()> {
    if count > budget as f64 {
        return Err(Error::BudgetExceeded { count: count.min(u128::MAX as f64) as u128, budget });
    }
    Ok(())
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Average over all strictly increasing row and column tuples.
pub fn brute_force_increasing(m: &MeasurementMatrix, n: usize) -> Result<f64> {
    brute_force_increasing_with_budget(m, n, DEFAULT_BUDGET)
}

pub fn brute_force_increasing_with_budget(m: &MeasurementMatrix, n: usize, budget: u128) -> Result<f64> {
    check_order(m, n)?;
    let count = binomial(m.p(), n) * binomial(m.q(), n);
    check_budget(count, budget)?;
    let col_sets: Vec<Vec<usize>> = (0..m.q()).combinations(n).collect();
    let mut acc = Compensated::ZERO;
    for rows in (0..m.p()).combinations(n) {
        for cols in &col_sets {
            acc.add(path_product(m, &rows, cols));
        }
    }
    Ok(acc.value() / count)
}

/// Average over all ordered tuples of distinct rows and distinct columns,
/// normalized by `Π_{i<n} (P−i)(Q−i)`.
pub fn brute_force_all_paths(m: &MeasurementMatrix, n: usize) -> Result<f64> {
    brute_force_all_paths_with_budget(m, n, DEFAULT_BUDGET)
}

pub fn brute_force_all_paths_with_budget(m: &MeasurementMatrix, n: usize, budget: u128) -> Result<f64> {
    check_order(m, n)?;
    let count = falling(m.p(), n) * falling(m.q(), n);
    check_budget(count, budget)?;
    let col_tuples: Vec<Vec<usize>> = (0..m.q()).permutations(n).collect();
    let mut acc = Compensated::ZERO;
    for rows in (0..m.p()).permutations(n) {
        for cols in &col_tuples {
            acc.add(path_product(m, &rows, cols));
        }
    }
    Ok(acc.value() / count)
}

/// `m̂*(2)` from Gram-matrix traces:
/// `c·m̂*(2) = m̂₀(2) − ΣK_ii²/P² − ΣK̃_αα²/Q² + ΣΦ⁴/(P²Q²)`,
/// `c = (P−1)(Q−1)/(PQ)`.
pub fn exact_second_moment(m: &MeasurementMatrix) -> Result<f64> {
    let (p, q) = (m.p(), m.q());
    if p < 2 || q < 2 {
        return Err(Error::precondition(format!("closed-form second moment needs P, Q >= 2 (got {p}x{q})")));
    }
    let (pf, qf) = (p as f64, q as f64);
    let naive2 = naive_moments(m, 2)?.value(2);
    let k = gram_matrix(m);
    let kt = feature_gram_matrix(m);
    let row_diag = compensated_sum(k.diagonal().iter().map(|v| v * v)) / (pf * pf);
    let col_diag = compensated_sum(kt.diagonal().iter().map(|v| v * v)) / (qf * qf);
    let quartic = compensated_sum(m.as_slice().iter().map(|v| v.powi(4))) / (pf * pf * qf * qf);
    let c = (pf - 1.0) * (qf - 1.0) / (pf * qf);
    Ok((naive2 - row_diag - col_diag + quartic) / c)
}
