//! Increasing-path moment estimator by dynamic programming.
//!
//! The estimator averages cyclic path products over strictly increasing row
//! tuples `i_1 < … < i_n` and column tuples `α_1 < … < α_n`:
//!
//! ```text
//! m̂(n) = 1/(C(P,n) C(Q,n)) Σ Π_l Φ[i_l, α_l] Φ[i_{l+1}, α_l],   i_{n+1} = i_1
//! ```
//!
//! For a fixed anchor row `h = i_1`, the partial sums
//! `S⁽ʰ⁾_ab[n] = Σ (Π_{l<n} Φ[i_l,α_l] Φ[i_{l+1},α_l]) Φ[a, b]` over
//! `h < i_2 < … < i_{n−1} < a` and `α_1 < … < α_{n−1} < b` obey
//!
//! ```text
//! S_ab[n+1] = Φ[a,b] Σ_{k<b} Φ[a,k] Σ_{l<a} S_lk[n]
//! ```
//!
//! which is evaluated with a running column prefix (over `l < a`) followed by a
//! running row prefix (over `k < b`), so each step costs `O(PQ)` and the whole
//! estimator `O(n P² Q)`. The path is closed with `Σ_ab S_ab[n] Φ[h, b]`.
//!
//! Scaling follows the reference recursion: `S[1] = P·Φ[h, ·]`, each step to
//! order `n` multiplies by `n² / ((P−n+1)(Q−n+1))`, closing multiplies by
//! `1/(PQ)`, and the anchor sum by `1/P`. The factors telescope to
//! `1/(C(P,n) C(Q,n))`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::naive::first_moment;
use crate::matrix::MeasurementMatrix;
use crate::moments::{EstimatorKind, MomentSequence};
use crate::rng;
use crate::sum::{compensated_sum, Compensated};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Transposed when `Q < P`, i.e. whichever of `P²Q` and `PQ²` is smaller.
    #[default]
    Auto,
    AsIs,
    Transposed,
}

impl Orientation {
    pub fn resolve(self, p: usize, q: usize) -> Orientation {
        match self {
            Orientation::Auto if q < p => Orientation::Transposed,
            Orientation::Auto => Orientation::AsIs,
            other => other,
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Orientation::Auto),
            "asis" | "as-is" => Ok(Orientation::AsIs),
            "transposed" => Ok(Orientation::Transposed),
            other => Err(Error::Format(format!("unknown orientation '{other}'"))),
        }
    }
}

/// The `P×Q` partial-sum matrix `S⁽ʰ⁾[n]` for one anchor row.
///
/// Invariant: `S_ab = 0` unless `a ≥ h + n − 1` and `b ≥ n − 1` (0-based).
#[derive(Debug, Clone)]
pub struct PartialSums {
    s: Vec<f64>,
    p: usize,
    q: usize,
    anchor: usize,
    order: usize,
    col_acc: Vec<Compensated>,
    row_buf: Vec<f64>,
}

impl PartialSums {
    /// `S[1]`: row `anchor` set to `P·Φ[anchor, ·]`, everything else zero.
    pub fn new(first: &MeasurementMatrix, anchor: usize) -> Self {
        let (p, q) = (first.p(), first.q());
        assert!(anchor < p, "anchor row out of range");
        let mut s = vec![0.0; p * q];
        let scale = p as f64;
        for (dst, src) in s[anchor * q..(anchor + 1) * q].iter_mut().zip(first.row(anchor)) {
            *dst = scale * src;
        }
        Self { s, p, q, anchor, order: 1, col_acc: vec![Compensated::ZERO; q], row_buf: vec![0.0; q] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.s[a * self.q + b]
    }

    /// Largest order reachable from this anchor (rows `anchor..P` available).
    pub fn max_order(&self) -> usize {
        (self.p - self.anchor).min(self.q)
    }

    /// Advances `S[n] → S[n+1]`. `row_step` supplies the entry `Φ[a, k]`
    /// joining the previous column to the new row, `col_step` the entry
    /// `Φ[a, b]` on the new row; they differ only for trial alternation.
    pub fn advance(&mut self, row_step: &MeasurementMatrix, col_step: &MeasurementMatrix) {
        let n = self.order + 1;
        let (p, q) = (self.p, self.q);
        let factor = (n * n) as f64 / ((p - n + 1) as f64 * (q - n + 1) as f64);
        let old_start = self.anchor + self.order - 1;
        let new_start = old_start + 1;

        self.col_acc.fill(Compensated::ZERO);
        for a in old_start..p {
            if a >= new_start {
                let link = row_step.row(a);
                let here = col_step.row(a);
                let mut run = Compensated::ZERO;
                for b in 0..q {
                    self.row_buf[b] = factor * run.value() * here[b];
                    run.add(self.col_acc[b].value() * link[b]);
                }
            }
            let row = &mut self.s[a * q..(a + 1) * q];
            for (acc, &v) in self.col_acc.iter_mut().zip(row.iter()) {
                acc.add(v);
            }
            if a >= new_start {
                row.copy_from_slice(&self.row_buf);
            } else {
                row.fill(0.0);
            }
        }
        self.order = n;
    }

    /// `(1/PQ) Σ_ab S_ab Φ[anchor, b]`.
    pub fn close(&self, closing: &MeasurementMatrix) -> f64 {
        let q = self.q;
        let start = self.anchor + self.order - 1;
        let anchor_row = closing.row(self.anchor);
        let mut acc = Compensated::ZERO;
        for a in start..self.p {
            for (s, phi) in self.s[a * q..(a + 1) * q].iter().zip(anchor_row) {
                acc.add(s * phi);
            }
        }
        acc.value() / (self.p * q) as f64
    }
}

/// Which trial supplies each factor of the path product.
///
/// Positions follow the path order `t_1, t_2, …, t_{2n}`: `start = t_1`
/// (initial row), `steps[n−2] = (t_{2n−2}, t_{2n−1})` for the step to order `n`,
/// and `closures[n−2]` is the trial of the closing entry at order `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub start: usize,
    pub steps: Vec<(usize, usize)>,
    pub closures: Vec<usize>,
}

impl TrialSchedule {
    /// Every factor from the same trial.
    pub fn single(n_max: usize) -> Self {
        let len = n_max.saturating_sub(1);
        Self { start: 0, steps: vec![(0, 0); len], closures: vec![0; len] }
    }

    /// Strict alternation `1, 2, 1, 2, …` between trials 0 and 1.
    pub fn alternating(n_max: usize) -> Self {
        let len = n_max.saturating_sub(1);
        Self { start: 0, steps: vec![(1, 0); len], closures: vec![1; len] }
    }

    /// Draws a schedule satisfying the adjacency constraint uniformly at each
    /// choice point.
    pub fn random(trials: usize, n_max: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if trials < 2 {
            return Err(Error::precondition("trial alternation needs at least two trials"));
        }
        let pick = |rng: &mut ChaCha8Rng, avoid: &[usize]| -> usize {
            let allowed: Vec<usize> = (0..trials).filter(|t| !avoid.contains(t)).collect();
            allowed[rng.random_range(0..allowed.len())]
        };
        let start = rng.random_range(0..trials);
        let mut prev = start;
        let mut steps = Vec::new();
        let mut closures = Vec::new();
        for _ in 2..=n_max {
            let link = pick(rng, &[prev]);
            let here = pick(rng, &[link]);
            let close = pick(rng, &[here, start]);
            steps.push((link, here));
            closures.push(close);
            prev = here;
        }
        Ok(Self { start, steps, closures })
    }

    /// Checks trial indices and the adjacency constraint: consecutive path
    /// factors (and the wrap pair `t_1`, `t_{2n}`) come from distinct trials.
    pub fn validate(&self, trials: usize, n_max: usize) -> Result<()> {
        let need = n_max.saturating_sub(1);
        if self.steps.len() < need || self.closures.len() < need {
            return Err(Error::precondition(format!(
                "trial schedule covers {} orders, {n_max} requested",
                self.steps.len().min(self.closures.len()) + 1
            )));
        }
        let in_range = |t: usize| t < trials;
        if !in_range(self.start) {
            return Err(Error::precondition(format!("trial {} out of range", self.start)));
        }
        let mut prev = self.start;
        for (idx, (&(link, here), &close)) in self.steps.iter().zip(&self.closures).take(need).enumerate() {
            let n = idx + 2;
            for t in [link, here, close] {
                if !in_range(t) {
                    return Err(Error::precondition(format!("trial {t} out of range")));
                }
            }
            if link == prev || here == link {
                return Err(Error::precondition(format!(
                    "adjacent factors share a trial in the step to order {n}"
                )));
            }
            if close == here || close == self.start {
                return Err(Error::precondition(format!(
                    "closing factor at order {n} shares a trial with a neighbour"
                )));
            }
            prev = here;
        }
        Ok(())
    }
}

fn check_dp_args(ms: &[&MeasurementMatrix], n_max: usize) -> Result<()> {
    let first = ms[0];
    if let Some(bad) = ms.iter().find(|m| !m.same_shape(first)) {
        return Err(Error::DimensionMismatch { expected: first.p() * first.q(), actual: bad.p() * bad.q() });
    }
    if n_max == 0 {
        return Err(Error::precondition("n_max must be at least 1"));
    }
    let side = first.p().min(first.q());
    if n_max > side {
        return Err(Error::precondition(format!(
            "n_max = {n_max} exceeds min(P, Q) = {side}; no increasing tuple exists"
        )));
    }
    Ok(())
}

/// Core recursion. Returns `m̂(n)` for `n = 2..=n_max`; `schedule(h)` gives the
/// trial schedule for anchor row `h`.
fn increasing_path_sums<F>(ms: &[&MeasurementMatrix], n_max: usize, schedule: F) -> Vec<f64>
where
    F: Fn(usize) -> TrialSchedule + Sync,
{
    let p = ms[0].p();
    if n_max < 2 {
        return Vec::new();
    }
    let per_anchor: Vec<Vec<f64>> = (0..p - 1)
        .into_par_iter()
        .map(|h| {
            let sched = schedule(h);
            let mut sums = PartialSums::new(ms[sched.start], h);
            let top = n_max.min(sums.max_order());
            let mut out = vec![0.0; n_max - 1];
            for n in 2..=top {
                let (link, here) = sched.steps[n - 2];
                sums.advance(ms[link], ms[here]);
                out[n - 2] = sums.close(ms[sched.closures[n - 2]]);
            }
            out
        })
        .collect();
    (0..n_max - 1).map(|i| compensated_sum(per_anchor.iter().map(|v| v[i])) / p as f64).collect()
}

/// `m̂(n)` for `n = 1..=n_max`; `m̂(1)` is the mean of `Φ²`.
pub fn dp_moments(m: &MeasurementMatrix, n_max: usize, orientation: Orientation) -> Result<MomentSequence> {
    check_dp_args(&[m], n_max)?;
    let transposed;
    let target = match orientation.resolve(m.p(), m.q()) {
        Orientation::Transposed => {
            transposed = m.transpose();
            &transposed
        }
        _ => m,
    };
    let mut values = vec![first_moment(m)];
    values.extend(increasing_path_sums(&[target], n_max, |_| TrialSchedule::single(n_max)));
    Ok(MomentSequence::new(EstimatorKind::Dp, values)?.with_dims(m.p(), m.q()))
}

fn cross_first_moment(a: &MeasurementMatrix, b: &MeasurementMatrix) -> f64 {
    compensated_sum(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y)) / (a.p() * a.q()) as f64
}

/// Two-trial alternation: path factors come from `m1, m2, m1, m2, …`.
/// `m̂(1)` is the mean of `Φ⁽¹⁾∘Φ⁽²⁾`.
pub fn dp_moments_alt2(
    m1: &MeasurementMatrix,
    m2: &MeasurementMatrix,
    n_max: usize,
) -> Result<MomentSequence> {
    check_dp_args(&[m1, m2], n_max)?;
    let mut values = vec![cross_first_moment(m1, m2)];
    values.extend(increasing_path_sums(&[m1, m2], n_max, |_| TrialSchedule::alternating(n_max)));
    let mut seq = MomentSequence::new(EstimatorKind::DpAlt2, values)?.with_dims(m1.p(), m1.q());
    seq.meta.trials = Some(2);
    Ok(seq)
}

/// Alternation over `T ≥ 2` trials with a random valid schedule per anchor row
/// (drawn from `seed`). `m̂(1)` averages `Φ⁽ᵗ⁾∘Φ⁽ᵗ⁺¹⁾` over cyclically adjacent
/// trial pairs.
pub fn dp_moments_alt_t(ms: &[MeasurementMatrix], n_max: usize, seed: u64) -> Result<MomentSequence> {
    if ms.len() < 2 {
        return Err(Error::precondition("trial alternation needs at least two trials"));
    }
    let refs: Vec<&MeasurementMatrix> = ms.iter().collect();
    check_dp_args(&refs, n_max)?;
    let trials = ms.len();
    let mut values = vec![alt_first_moment(&refs)];
    values.extend(increasing_path_sums(&refs, n_max, |h| {
        let mut rng = rng::stream_rng(seed, rng::schedule(h));
        TrialSchedule::random(trials, n_max, &mut rng).expect("at least two trials")
    }));
    finish_alt(values, &refs, seed)
}

/// Alternation with one fixed, validated schedule used for every anchor row.
pub fn dp_moments_alt_scheduled(
    ms: &[MeasurementMatrix],
    n_max: usize,
    schedule: &TrialSchedule,
) -> Result<MomentSequence> {
    if ms.len() < 2 {
        return Err(Error::precondition("trial alternation needs at least two trials"));
    }
    let refs: Vec<&MeasurementMatrix> = ms.iter().collect();
    check_dp_args(&refs, n_max)?;
    schedule.validate(ms.len(), n_max)?;
    let mut values = vec![alt_first_moment(&refs)];
    values.extend(increasing_path_sums(&refs, n_max, |_| schedule.clone()));
    finish_alt(values, &refs, 0)
}

fn alt_first_moment(ms: &[&MeasurementMatrix]) -> f64 {
    if ms.len() == 2 {
        return cross_first_moment(ms[0], ms[1]);
    }
    let t = ms.len();
    compensated_sum((0..t).map(|i| cross_first_moment(ms[i], ms[(i + 1) % t]))) / t as f64
}

fn finish_alt(values: Vec<f64>, ms: &[&MeasurementMatrix], seed: u64) -> Result<MomentSequence> {
    let mut seq =
        MomentSequence::new(EstimatorKind::DpAltT, values)?.with_dims(ms[0].p(), ms[0].q()).with_seed(seed);
    seq.meta.trials = Some(ms.len());
    Ok(seq)
}

/// Averages [`dp_moments`] (automatic orientation) over `repeats` uniform
/// row/column permutations of `Φ`; the first repeat is the identity.
pub fn permuted_dp_moments(
    m: &MeasurementMatrix,
    n_max: usize,
    repeats: usize,
    seed: u64,
) -> Result<MomentSequence> {
    if repeats == 0 {
        return Err(Error::precondition("repeats must be at least 1"));
    }
    check_dp_args(&[m], n_max)?;
    let runs: Vec<Vec<f64>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let seq = if r == 0 {
                dp_moments(m, n_max, Orientation::Auto)
            } else {
                let mut rng = rng::stream_rng(seed, rng::permutation(r));
                let mut rows: Vec<usize> = (0..m.p()).collect();
                let mut cols: Vec<usize> = (0..m.q()).collect();
                rows.shuffle(&mut rng);
                cols.shuffle(&mut rng);
                dp_moments(&m.permuted(&rows, &cols), n_max, Orientation::Auto)
            };
            seq.map(|s| s.values().to_vec())
        })
        .collect::<Result<_>>()?;
    let values = (0..n_max).map(|i| compensated_sum(runs.iter().map(|v| v[i])) / repeats as f64).collect();
    Ok(MomentSequence::new(EstimatorKind::Dp, values)?.with_dims(m.p(), m.q()).with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn micro() -> MeasurementMatrix {
        MeasurementMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
    }

    #[test]
    fn micro_example() {
        let s = dp_moments(&micro(), 2, Orientation::AsIs).unwrap();
        assert_relative_eq!(s.value(1), 7.5);
        assert_relative_eq!(s.value(2), 24.0, max_relative = 1e-14);
        let t = dp_moments(&micro(), 2, Orientation::Transposed).unwrap();
        assert_relative_eq!(t.value(2), 24.0, max_relative = 1e-14);
    }

    #[test]
    fn ones_give_one_at_every_order() {
        for (p, q) in [(5, 7), (7, 5), (6, 6)] {
            let m = MeasurementMatrix::filled(p, q, 1.0).unwrap();
            for orient in [Orientation::AsIs, Orientation::Transposed] {
                let s = dp_moments(&m, 5, orient).unwrap();
                for (_, v) in s.iter() {
                    assert_relative_eq!(v, 1.0, max_relative = 1e-13);
                }
            }
        }
    }

    #[test]
    fn order_beyond_min_side_is_an_error() {
        let m = MeasurementMatrix::filled(3, 6, 1.0).unwrap();
        assert!(dp_moments(&m, 4, Orientation::Auto).is_err());
        assert!(dp_moments(&m, 0, Orientation::Auto).is_err());
        assert!(dp_moments(&m, 3, Orientation::Auto).is_ok());
    }

    #[test]
    fn partial_sum_support_invariant() {
        let m = MeasurementMatrix::from_rows(&[
            [1.0, 2.0, 3.0, 4.0],
            [0.5, -1.0, 2.0, 1.0],
            [1.5, 0.2, -0.3, 2.0],
            [0.1, 0.7, 1.1, -0.9],
            [2.0, 1.0, 0.4, 0.6],
        ])
        .unwrap();
        let h = 1;
        let mut s = PartialSums::new(&m, h);
        for a in 0..5 {
            for b in 0..4 {
                assert_eq!(s.get(a, b) != 0.0, a == h && m.get(a, b) != 0.0);
            }
        }
        for _ in 0..2 {
            s.advance(&m, &m);
            let n = s.order();
            for a in 0..5 {
                for b in 0..4 {
                    if a < h + n - 1 || b < n - 1 {
                        assert_eq!(s.get(a, b), 0.0, "order {n} at ({a}, {b})");
                    }
                }
            }
        }
    }

    #[test]
    fn alt2_degenerates_to_single_trial() {
        let a = dp_moments_alt2(&micro(), &micro(), 2).unwrap();
        assert_relative_eq!(a.value(2), 24.0, max_relative = 1e-14);
        assert_eq!(a.value(1), 7.5);
    }

    #[test]
    fn alt2_rejects_shape_mismatch() {
        let other = MeasurementMatrix::filled(2, 3, 1.0).unwrap();
        assert!(matches!(dp_moments_alt2(&micro(), &other, 2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn schedule_validation() {
        assert!(TrialSchedule::alternating(5).validate(2, 5).is_ok());
        assert!(TrialSchedule::single(3).validate(2, 3).is_err());
        let mut bad = TrialSchedule::alternating(3);
        bad.closures[1] = 0; // closing entry shares trial with t_1
        assert!(bad.validate(2, 3).is_err());
        let mut bad = TrialSchedule::alternating(3);
        bad.steps[0] = (0, 1); // t_2 == t_1
        assert!(bad.validate(3, 3).is_err());
        assert!(TrialSchedule::alternating(3).validate(2, 4).is_err());
        let mut out_of_range = TrialSchedule::alternating(2);
        out_of_range.start = 2;
        assert!(out_of_range.validate(2, 2).is_err());
    }

    #[test]
    fn random_schedules_are_valid() {
        for seed in 0..50 {
            let mut rng = rng::stream_rng(seed, 0);
            for trials in 2..5 {
                let s = TrialSchedule::random(trials, 6, &mut rng).unwrap();
                s.validate(trials, 6).unwrap();
            }
        }
        let mut rng = rng::stream_rng(0, 0);
        assert!(TrialSchedule::random(1, 3, &mut rng).is_err());
    }

    #[test]
    fn alt_t_requires_two_trials() {
        assert!(dp_moments_alt_t(&[micro()], 2, 0).is_err());
        let sched = TrialSchedule::single(2);
        assert!(dp_moments_alt_scheduled(&[micro(), micro()], 2, &sched).is_err());
    }

    #[test]
    fn single_repeat_is_plain_dp() {
        let m = MeasurementMatrix::from_rows(&[
            [0.3, 1.0, -0.5],
            [1.2, 0.1, 0.7],
            [-0.4, 0.8, 1.5],
            [0.9, -1.1, 0.2],
        ])
        .unwrap();
        let a = permuted_dp_moments(&m, 3, 1, 99).unwrap();
        let b = dp_moments(&m, 3, Orientation::Auto).unwrap();
        assert_eq!(a.values(), b.values());
        let ones = MeasurementMatrix::filled(5, 6, 1.0).unwrap();
        let c = permuted_dp_moments(&ones, 4, 5, 3).unwrap();
        for (_, v) in c.iter() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        }
        assert!(permuted_dp_moments(&m, 3, 0, 0).is_err());
    }

    #[test]
    fn auto_orientation_rule() {
        assert_eq!(Orientation::Auto.resolve(10, 5), Orientation::Transposed);
        assert_eq!(Orientation::Auto.resolve(5, 10), Orientation::AsIs);
        assert_eq!(Orientation::Auto.resolve(5, 5), Orientation::AsIs);
        assert_eq!(Orientation::AsIs.resolve(10, 5), Orientation::AsIs);
    }
}
