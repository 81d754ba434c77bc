//! Increasing-index trace estimator for fully observed features.
//!
//! With `K̄ = (1/Q̄) Φ̄Φ̄ᵀ` and `K̄_up` its strict upper triangle,
//! `m̂_KV(n) = tr(K̄_upⁿ⁻¹ K̄) / C(P̄, n)`. The row orientation uses `Φ̄ = Φ`
//! (features treated as fully observed); the column orientation uses
//! `Φ̄ = Φᵀ` (inputs treated as fully observed).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;
use crate::moments::{EstimatorKind, MomentSequence};
use crate::sum::{binomial, compensated_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KvOrientation {
    Row,
    Col,
}

pub fn kv_moments(m: &MeasurementMatrix, n_max: usize, orientation: KvOrientation) -> Result<MomentSequence> {
    kv_moments_with(m, n_max, orientation, false)
}

/// As [`kv_moments`]; with `center` each column of `Φ̄` is shifted to zero
/// mean first (the zero-mean assumption behind the estimator's unbiasedness).
pub fn kv_moments_with(
    m: &MeasurementMatrix,
    n_max: usize,
    orientation: KvOrientation,
    center: bool,
) -> Result<MomentSequence> {
    let (kind, bar) = match orientation {
        KvOrientation::Row => (EstimatorKind::KvRow, m.to_dmatrix()),
        KvOrientation::Col => (EstimatorKind::KvCol, m.transpose().to_dmatrix()),
    };
    let values = kv_values(bar, n_max, center)?;
    Ok(MomentSequence::new(kind, values)?.with_dims(m.p(), m.q()))
}

fn kv_values(mut bar: DMatrix<f64>, n_max: usize, center: bool) -> Result<Vec<f64>> {
    let (rows, cols) = bar.shape();
    if n_max == 0 {
        return Err(Error::precondition("n_max must be at least 1"));
    }
    if n_max > rows {
        return Err(Error::precondition(format!(
            "n_max = {n_max} exceeds the {rows} sampled indices; C({rows}, n) normalization undefined"
        )));
    }
    if center {
        for mut col in bar.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    let inv_cols = 1.0 / cols as f64;
    let k = &bar * bar.transpose() * inv_cols;
    let mut values = Vec::with_capacity(n_max);
    values.push(compensated_sum(k.diagonal().iter().copied()) / rows as f64);
    if n_max == 1 {
        return Ok(values);
    }
    let mut k_up = k.clone();
    for i in 0..rows {
        for j in 0..=i {
            k_up[(i, j)] = 0.0;
        }
    }
    // tr(K_upⁿ⁻¹ K̄): repeatedly left-multiply a right factor by K_up. When the
    // feature side is smaller, K̄ = Φ̄Φ̄ᵀ/Q̄ is kept factored and the trace is
    // read off as ⟨Φ̄, K_upⁿ⁻¹Φ̄⟩/Q̄.
    let low_rank = cols < rows;
    let mut z = if low_rank { bar.clone() } else { k };
    for n in 2..=n_max {
        z = &k_up * &z;
        let trace = if low_rank {
            compensated_sum(bar.iter().zip(z.iter()).map(|(a, b)| a * b)) * inv_cols
        } else {
            compensated_sum(z.diagonal().iter().copied())
        };
        values.push(trace / binomial(rows, n));
    }
    Ok(values)
}
