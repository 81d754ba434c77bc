use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;
use crate::moments::{EstimatorKind, MomentSequence};
use crate::sum::compensated_sum;

/// Sample Gram matrix `K_ij = (1/Q) Σ_α Φ_iα Φ_jα`.
pub fn gram_matrix(m: &MeasurementMatrix) -> DMatrix<f64> {
    let phi = m.to_dmatrix();
    let mut k = &phi * phi.transpose();
    k /= m.q() as f64;
    k
}

/// Feature-side Gram matrix `K̃_αβ = (1/P) Σ_i Φ_iα Φ_iβ`.
pub fn feature_gram_matrix(m: &MeasurementMatrix) -> DMatrix<f64> {
    let phi = m.to_dmatrix();
    let mut k = phi.transpose() * &phi;
    k /= m.p() as f64;
    k
}

/// Mean of `Φ²` over all entries; every estimator's `m(1)`.
pub fn first_moment(m: &MeasurementMatrix) -> f64 {
    compensated_sum(m.as_slice().iter().map(|v| v * v)) / (m.p() * m.q()) as f64
}

/// `m̂₀(n) = tr[(K/P)ⁿ]`.
///
/// The powers are taken on whichever of `ΦΦᵀ/(PQ)` and `ΦᵀΦ/(PQ)` is
/// smaller; both have the same nonzero spectrum.
pub fn naive_moments(m: &MeasurementMatrix, n_max: usize) -> Result<MomentSequence> {
    if n_max == 0 {
        return Err(Error::precondition("n_max must be at least 1"));
    }
    let phi = m.to_dmatrix();
    let scale = (m.p() * m.q()) as f64;
    let base = if m.p() <= m.q() { &phi * phi.transpose() / scale } else { phi.transpose() * &phi / scale };
    let mut values = Vec::with_capacity(n_max);
    values.push(first_moment(m));
    let mut power = base.clone();
    for _ in 2..=n_max {
        power = &power * &base;
        values.push(compensated_sum(power.diagonal().iter().copied()));
    }
    Ok(MomentSequence::new(EstimatorKind::Naive, values)?.with_dims(m.p(), m.q()))
}

/// Eigenvalues of `K/P` in non-increasing order (the "SVD of the Gram
/// matrix" baseline). Tiny negative round-off is clamped to zero.
pub fn gram_spectrum(m: &MeasurementMatrix) -> Vec<f64> {
    let phi = m.to_dmatrix();
    let scale = (m.p() * m.q()) as f64;
    let small = if m.p() <= m.q() { &phi * phi.transpose() / scale } else { phi.transpose() * &phi / scale };
    let mut eig: Vec<f64> = small.symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.resize(m.p(), 0.0);
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn micro() -> MeasurementMatrix {
        MeasurementMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
    }

    #[test]
    fn gram_examples() {
        let k = gram_matrix(&micro());
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[2.5, 5.5, 5.5, 12.5]));
        let ones = MeasurementMatrix::filled(3, 4, 1.0).unwrap();
        assert_eq!(gram_matrix(&ones), DMatrix::from_element(3, 3, 1.0));
        let col = MeasurementMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        assert_eq!(gram_matrix(&col), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn naive_micro_example() {
        let s = naive_moments(&micro(), 2).unwrap();
        assert_relative_eq!(s.value(1), 7.5);
        assert_relative_eq!(s.value(2), 55.75, max_relative = 1e-14);
    }

    #[test]
    fn naive_on_ones_is_one() {
        for (p, q) in [(3, 5), (6, 2)] {
            let s = naive_moments(&MeasurementMatrix::filled(p, q, 1.0).unwrap(), 5).unwrap();
            for (_, v) in s.iter() {
                assert_relative_eq!(v, 1.0, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn both_gram_orientations_agree() {
        let tall = MeasurementMatrix::from_rows(&[[1.0, -2.0], [0.5, 3.0], [2.0, 1.0]]).unwrap();
        let a = naive_moments(&tall, 4).unwrap();
        let b = naive_moments(&tall.transpose(), 4).unwrap();
        for n in 1..=4 {
            assert_relative_eq!(a.value(n), b.value(n), max_relative = 1e-12);
        }
        let spec = gram_spectrum(&tall);
        assert_eq!(spec.len(), 3);
        assert_relative_eq!(spec.iter().map(|l| l * l).sum::<f64>(), a.value(2), max_relative = 1e-12);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(naive_moments(&micro(), 0).is_err());
    }
}
