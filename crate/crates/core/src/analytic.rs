//! Closed-form spectra and moments for the RBF and linear processes.
//!
//! For the RBF kernel with covariance `Σ` and inputs `x ~ N(0, Σ_x)`, the
//! operator spectrum depends only on the eigenvalues `η_i` of `Σ_xΣ⁻¹`. With
//! `φ_z = (1 + √(1+4z)) / (2z)`,
//!
//! ```text
//! λ_u  = Π_i (η_i^{1+u_i} φ_i^{1+2u_i})⁻¹          u ∈ ℕ^d
//! m(n) = Π_i 1 / (η_iⁿ φ_iⁿ − φ_i⁻ⁿ)
//! ```
//!
//! [`block_circulant_moment`] evaluates `m(n)` independently as a Gaussian
//! integral over `n` cyclically coupled inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{EstimatorKind, MomentSequence};
use crate::process::{cholesky, GenerativeProcess, ProcessKind};

/// Largest `n·d` accepted by [`block_circulant_moment`].
pub const BLOCK_CIRCULANT_LIMIT: usize = 2000;

/// Eigenvalues of `Σ^{-1/2} Σ_x Σ^{-1/2}` (the spectrum of `Σ_xΣ⁻¹`), descending.
pub fn compute_etas(sigma_x: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    if sigma_x.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch { expected: sigma.nrows(), actual: sigma_x.nrows() });
    }
    cholesky(sigma_x, "input covariance")?;
    cholesky(sigma, "kernel covariance")?;
    let eig = sigma.clone().symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * eig.eigenvectors.transpose();
    let mut congruent = &inv_sqrt * sigma_x * &inv_sqrt;
    congruent = (&congruent + congruent.transpose()) * 0.5;
    let mut etas: Vec<f64> = congruent.symmetric_eigenvalues().iter().copied().collect();
    etas.sort_by(|a, b| b.total_cmp(a));
    if etas.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::NotPositiveDefinite { what: "input covariance relative to kernel covariance" });
    }
    Ok(etas)
}

pub fn phi_scalar(z: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::precondition(format!("φ_z needs z > 0, got {z}")));
    }
    Ok((1.0 + (1.0 + 4.0 * z).sqrt()) / (2.0 * z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfSpectrumSpec {
    etas: Vec<f64>,
    phis: Vec<f64>,
}

impl RbfSpectrumSpec {
    pub fn new(etas: Vec<f64>) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::precondition("at least one η is required"));
        }
        let phis = etas.iter().map(|&e| phi_scalar(e)).collect::<Result<_>>()?;
        Ok(Self { etas, phis })
    }

    pub fn from_covariances(sigma_x: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<Self> {
        Self::new(compute_etas(sigma_x, sigma)?)
    }

    pub fn d(&self) -> usize {
        self.etas.len()
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// `λ_0 = Π 1/(η φ)`, the operator norm.
    pub fn leading(&self) -> f64 {
        self.etas.iter().zip(&self.phis).map(|(e, p)| 1.0 / (e * p)).product()
    }

    /// Per-coordinate decay ratios `r_i = 1/(η_i φ_i²) < 1`.
    pub fn ratios(&self) -> Vec<f64> {
        self.etas.iter().zip(&self.phis).map(|(e, p)| 1.0 / (e * p * p)).collect()
    }
}

pub fn rbf_eigenvalue(spec: &RbfSpectrumSpec, u: &[usize]) -> Result<f64> {
    if u.len() != spec.d() {
        return Err(Error::DimensionMismatch { expected: spec.d(), actual: u.len() });
    }
    Ok(spec
        .etas
        .iter()
        .zip(&spec.phis)
        .zip(u)
        .map(|((&e, &p), &k)| 1.0 / (e.powi(1 + k as i32) * p.powi(1 + 2 * k as i32)))
        .product())
}

/// Non-increasing list of nonnegative eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueList {
    values: Vec<f64>,
}

impl EigenvalueList {
    /// Sorts `values` non-increasing; rejects negative or non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonFinite(format!("eigenvalue {v} is not a nonnegative number")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of strictly positive entries.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// `Σ_i λ_iⁿ`.
    pub fn power_sum(&self, n: usize) -> f64 {
        crate::sum::compensated_sum(self.values.iter().map(|v| v.powi(n as i32)))
    }

    /// `index,eigenvalue` rows with 1-based index.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "eigenvalue"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, PartialEq)]
struct Node {
    log_value: f64,
    u: Vec<usize>,
}

impl Eq for Node {}

impl Ord for Node {
    // Larger eigenvalue first; ties go to the lexicographically larger u so
    // the enumeration order is fully determined.
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_value.total_cmp(&other.log_value).then_with(|| self.u.cmp(&other.u))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `count` largest `λ_u` with multiplicity, by best-first search over the
/// lattice `ℕ^d`. Each `u` is generated once: a node only increments
/// coordinates at or after its last nonzero coordinate.
pub fn rbf_top_eigenvalues(spec: &RbfSpectrumSpec, count: usize) -> Result<EigenvalueList> {
    if count == 0 {
        return Err(Error::precondition("count must be at least 1"));
    }
    let log_r: Vec<f64> = spec.ratios().iter().map(|r| r.ln()).collect();
    let log_lead = spec.leading().ln();
    let mut heap = BinaryHeap::new();
    heap.push(Node { log_value: log_lead, u: vec![0; spec.d()] });
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let Some(node) = heap.pop() else { break };
        out.push(node.log_value.exp());
        let first = node.u.iter().rposition(|&k| k > 0).unwrap_or(0);
        for j in first..spec.d() {
            let mut u = node.u.clone();
            u[j] += 1;
            heap.push(Node { log_value: node.log_value + log_r[j], u });
        }
    }
    EigenvalueList::new(out)
}

pub fn rbf_moment(spec: &RbfSpectrumSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::precondition("moment order must be at least 1"));
    }
    let n = n as i32;
    Ok(spec.etas.iter().zip(&spec.phis).map(|(&e, &p)| 1.0 / ((e * p).powi(n) - p.powi(-n))).product())
}

pub fn rbf_moments(spec: &RbfSpectrumSpec, n_max: usize) -> Result<MomentSequence> {
    let values = (1..=n_max).map(|n| rbf_moment(spec, n)).collect::<Result<_>>()?;
    MomentSequence::new(EstimatorKind::Analytic, values)
}

/// `m(n) = (det Σ_xⁿ · det M)^{-1/2}` with `M` the `nd×nd` block-circulant
/// precision of `n` inputs coupled cyclically through the kernel.
pub fn block_circulant_moment(sigma_x: &DMatrix<f64>, sigma: &DMatrix<f64>, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::precondition("moment order must be at least 1"));
    }
    let d = sigma_x.nrows();
    if sigma.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, actual: sigma.nrows() });
    }
    if n * d > BLOCK_CIRCULANT_LIMIT {
        return Err(Error::precondition(format!(
            "block-circulant size {} exceeds the limit {BLOCK_CIRCULANT_LIMIT}",
            n * d
        )));
    }
    let cx = cholesky(sigma_x, "input covariance")?;
    let ck = cholesky(sigma, "kernel covariance")?;
    let sx_inv = cx.inverse();
    let s_inv = ck.inverse();
    let diag = &s_inv * 2.0 + &sx_inv;

    let mut m = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        m.view_mut((i * d, i * d), (d, d)).copy_from(&diag);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        for (a, b) in [(i, j), (j, i)] {
            let mut block = m.view_mut((a * d, b * d), (d, d));
            block -= &s_inv;
        }
    }
    let logdet_m =
        2.0 * cholesky(&m, "block-circulant precision")?.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let logdet_x = 2.0 * cx.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((-0.5 * (n as f64 * logdet_x + logdet_m)).exp())
}

/// Moments of a rank-`d` operator with the single eigenvalue `eigenvalue`.
pub fn linear_process_moments(d: usize, eigenvalue: f64, n_max: usize) -> Result<MomentSequence> {
    if n_max == 0 || d == 0 {
        return Err(Error::precondition("d and n_max must be at least 1"));
    }
    if !(eigenvalue > 0.0 && eigenvalue.is_finite()) {
        return Err(Error::precondition("eigenvalue must be positive"));
    }
    let values = (1..=n_max).map(|n| d as f64 * eigenvalue.powi(n as i32)).collect();
    MomentSequence::new(EstimatorKind::Analytic, values)
}

/// Ground-truth operator spectrum of a process, where a closed form exists.
///
/// For the linear process `k(x, y) = scale² xᵀy`, so the eigenvalues are
/// `scale² · eig(Σ_x)`. RFF spectra are infinite and use
/// [`rbf_top_eigenvalues`] instead; ReLU has none.
pub fn linear_spectrum(process: &GenerativeProcess) -> Option<EigenvalueList> {
    if process.kind() != ProcessKind::LinearGaussian {
        return None;
    }
    let s2 = process.scale() * process.scale();
    let sx = process.sigma_x();
    let d = sx.nrows();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || sx[(i, j)] == 0.0));
    let eig = if diagonal { sx.diagonal() } else { sx.clone().symmetric_eigenvalues() };
    let vals = eig.iter().map(|v| s2 * v.max(0.0)).collect();
    EigenvalueList::new(vals).ok()
}

/// Ground-truth moments `m(1..=n_max)` of a process, if known in closed form.
pub fn ground_truth_moments(process: &GenerativeProcess, n_max: usize) -> Option<MomentSequence> {
    match process.kind() {
        ProcessKind::Rff => {
            let spec = RbfSpectrumSpec::from_covariances(process.sigma_x(), process.sigma()).ok()?;
            rbf_moments(&spec, n_max).ok()
        }
        ProcessKind::LinearGaussian => {
            let spectrum = linear_spectrum(process)?;
            let values = (1..=n_max).map(|n| spectrum.power_sum(n)).collect();
            MomentSequence::new(EstimatorKind::Analytic, values).ok()
        }
        ProcessKind::ReluRandomFeature => None,
    }
}
