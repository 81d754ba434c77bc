//! Spectral moment estimators and their exponential-time oracles.

pub mod dp;
pub mod kv;
pub mod naive;
pub mod paths;
pub mod variance;

pub use dp::{
    dp_moments, dp_moments_alt2, dp_moments_alt_scheduled, dp_moments_alt_t, permuted_dp_moments,
    Orientation, PartialSums, TrialSchedule,
};
pub use kv::{kv_moments, kv_moments_with, KvOrientation};
pub use naive::{feature_gram_matrix, first_moment, gram_matrix, gram_spectrum, naive_moments};
pub use paths::{
    brute_force_all_paths, brute_force_all_paths_with_budget, brute_force_increasing,
    brute_force_increasing_with_budget, exact_second_moment,
};
pub use variance::{chebyshev_error, estimate_f, variance_bound};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;
use crate::moments::{EstimatorKind, MomentSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub orientation: Orientation,
    /// Permutation repeats for the single-trial DP estimator.
    pub repeats: usize,
    pub seed: u64,
    pub kv_center: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { orientation: Orientation::Auto, repeats: 1, seed: 0, kv_center: false }
    }
}

/// Runs one estimator on the trial matrices `ms` (single-trial estimators
/// use `ms[0]`) and records the wall-clock time in the metadata.
pub fn estimate(
    kind: EstimatorKind,
    ms: &[MeasurementMatrix],
    n_max: usize,
    opts: &EstimateOptions,
) -> Result<MomentSequence> {
    let Some(m) = ms.first() else {
        return Err(Error::precondition("no measurement matrix supplied"));
    };
    let start = Instant::now();
    let mut seq = match kind {
        EstimatorKind::Naive => naive_moments(m, n_max)?,
        EstimatorKind::KvRow => kv_moments_with(m, n_max, KvOrientation::Row, opts.kv_center)?,
        EstimatorKind::KvCol => kv_moments_with(m, n_max, KvOrientation::Col, opts.kv_center)?,
        EstimatorKind::ExactN2 => {
            if n_max != 2 {
                return Err(Error::precondition("exact2 defines only n = 1 and n = 2"));
            }
            MomentSequence::new(kind, vec![first_moment(m), exact_second_moment(m)?])?
        }
        EstimatorKind::Dp if opts.repeats > 1 => permuted_dp_moments(m, n_max, opts.repeats, opts.seed)?,
        EstimatorKind::Dp => dp_moments(m, n_max, opts.orientation)?,
        EstimatorKind::DpAlt2 => {
            if ms.len() < 2 {
                return Err(Error::precondition("dp-alt2 needs two trial matrices"));
            }
            dp_moments_alt2(&ms[0], &ms[1], n_max)?
        }
        EstimatorKind::DpAltT => dp_moments_alt_t(ms, n_max, opts.seed)?,
        EstimatorKind::BruteForceIncreasing | EstimatorKind::BruteForceAllPaths => {
            let f = if kind == EstimatorKind::BruteForceIncreasing {
                brute_force_increasing
            } else {
                brute_force_all_paths
            };
            let mut values = vec![first_moment(m)];
            for n in 2..=n_max {
                values.push(f(m, n)?);
            }
            MomentSequence::new(kind, values)?
        }
        EstimatorKind::Analytic => {
            return Err(Error::precondition("analytic moments come from the process, not a matrix"))
        }
    };
    seq.meta.p = Some(m.p());
    seq.meta.q = Some(m.q());
    seq.meta.seed.get_or_insert(m.seed);
    seq.meta.wall_time_s = Some(start.elapsed().as_secs_f64());
    Ok(seq)
}
