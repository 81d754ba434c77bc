//! Generative processes `(φ, ρ_X, ρ_W)` and measurement-matrix construction.
//!
//! Three families are provided:
//!
//! * random Fourier features, `φ(x, (w, b)) = √2 sin(wᵀx + b)` with
//!   `w ~ N(0, Σ⁻¹)`, `b ~ U[0, 2π)`; the induced kernel is the Gaussian RBF
//!   kernel with covariance `Σ`;
//! * a bilinear process `φ(x, w) = scale · xᵀw` with `w ~ N(0, I)`;
//! * untrained ReLU random features `φ(x, w) = max(xᵀw, 0)` with `w ~ N(0, I)`.
//!
//! Inputs are always `x ~ N(0, Σ_x)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::MeasurementMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Rff,
    LinearGaussian,
    ReluRandomFeature,
}

#[derive(Debug, Clone)]
pub struct GenerativeProcess {
    kind: ProcessKind,
    d: usize,
    sigma_x: DMatrix<f64>,
    sigma: DMatrix<f64>,
    scale: f64,
    // Lower Cholesky factor of Σ_x.
    input_factor: Factor,
    // Lower Cholesky factor L of Σ (RFF only); w = L⁻ᵀ z has covariance Σ⁻¹.
    kernel_factor: Option<Factor>,
}

/// Cholesky factor, kept as a vector of square roots for diagonal matrices.
#[derive(Debug, Clone)]
enum Factor {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Factor {
    fn new(m: &DMatrix<f64>, what: &'static str) -> Result<Self> {
        let d = m.nrows();
        let diagonal = m.is_square() && d > 0 && (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)] == 0.0));
        if diagonal {
            let diag = m.diagonal();
            if diag.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::NotPositiveDefinite { what });
            }
            return Ok(Factor::Diagonal(diag.map(f64::sqrt)));
        }
        Ok(Factor::Dense(cholesky(m, what)?.l()))
    }

    /// `L z`.
    fn mul(&self, z: DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Diagonal(s) => z.component_mul(s),
            Factor::Dense(l) => l * z,
        }
    }

    /// `L⁻ᵀ z`.
    fn solve_transposed(&self, z: DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Diagonal(s) => z.component_div(s),
            Factor::Dense(l) => {
                l.transpose().solve_upper_triangular(&z).expect("Cholesky factor has a positive diagonal")
            }
        }
    }
}

/// A sampled column variable `w_α`.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Fourier { w: DVector<f64>, phase: f64 },
    Weight(DVector<f64>),
}

impl Feature {
    pub fn weights(&self) -> &DVector<f64> {
        match self {
            Feature::Fourier { w, .. } | Feature::Weight(w) => w,
        }
    }
}

pub(crate) fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::NotPositiveDefinite { what });
    }
    let asym = (m - m.transpose()).abs().max();
    if !asym.is_finite() || asym > 1e-10 * m.abs().max().max(1.0) {
        return Err(Error::NotPositiveDefinite { what });
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite { what })
}

impl GenerativeProcess {
    /// Random Fourier features for the RBF kernel with covariance `sigma`,
    /// inputs drawn from `N(0, sigma_x)`.
    pub fn rff(sigma_x: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma_x.nrows();
        if sigma.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: sigma.nrows() });
        }
        let input_factor = Factor::new(&sigma_x, "input covariance")?;
        let kernel_factor = Factor::new(&sigma, "kernel covariance")?;
        Ok(Self {
            kind: ProcessKind::Rff,
            d,
            sigma_x,
            sigma,
            scale: 1.0,
            input_factor,
            kernel_factor: Some(kernel_factor),
        })
    }

    /// `φ(x, w) = scale · xᵀw` with `x, w ~ N(0, I_d)`; the operator has the
    /// single eigenvalue `scale²` with multiplicity `d`.
    pub fn linear(d: usize, scale: f64) -> Result<Self> {
        Self::weighted(ProcessKind::LinearGaussian, DMatrix::identity(d, d), scale)
    }

    pub fn relu(d: usize) -> Result<Self> {
        Self::weighted(ProcessKind::ReluRandomFeature, DMatrix::identity(d, d), 1.0)
    }

    /// Linear or ReLU process with a general input covariance.
    pub fn weighted(kind: ProcessKind, sigma_x: DMatrix<f64>, scale: f64) -> Result<Self> {
        if kind == ProcessKind::Rff {
            return Err(Error::precondition("use GenerativeProcess::rff for Fourier features"));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::precondition("scale must be finite and nonnegative"));
        }
        let d = sigma_x.nrows();
        if d == 0 {
            return Err(Error::precondition("latent dimension must be at least 1"));
        }
        let input_factor = Factor::new(&sigma_x, "input covariance")?;
        Ok(Self {
            kind,
            d,
            sigma: DMatrix::identity(d, d),
            sigma_x,
            scale,
            input_factor,
            kernel_factor: None,
        })
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma_x(&self) -> &DMatrix<f64> {
        &self.sigma_x
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn standard_normal(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_iterator(self.d, (0..self.d).map(|_| rng.sample::<f64, _>(StandardNormal)))
    }

    pub(crate) fn draw_input(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        self.input_factor.mul(self.standard_normal(rng))
    }

    pub(crate) fn draw_feature(&self, rng: &mut ChaCha8Rng) -> Feature {
        let z = self.standard_normal(rng);
        match &self.kernel_factor {
            Some(l) => {
                let w = l.solve_transposed(z);
                let phase = rng.random_range(0.0..2.0 * PI);
                Feature::Fourier { w, phase }
            }
            None => Feature::Weight(z),
        }
    }

    /// Draws `p` inputs `x_i ~ N(0, Σ_x)`.
    pub fn sample_inputs(&self, p: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        if p == 0 {
            return Err(Error::precondition("p must be at least 1"));
        }
        let mut rng = rng::stream_rng(seed, rng::INPUTS);
        Ok((0..p).map(|_| self.draw_input(&mut rng)).collect())
    }

    pub fn sample_features(&self, q: usize, seed: u64) -> Result<Vec<Feature>> {
        if q == 0 {
            return Err(Error::precondition("q must be at least 1"));
        }
        let mut rng = rng::stream_rng(seed, rng::FEATURES);
        Ok((0..q).map(|_| self.draw_feature(&mut rng)).collect())
    }

    pub fn evaluate_phi(&self, x: &DVector<f64>, feature: &Feature) -> Result<f64> {
        let w = feature.weights();
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: x.len() });
        }
        if w.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: w.len() });
        }
        Ok(self.phi_unchecked(x, feature))
    }

    #[inline]
    pub(crate) fn phi_unchecked(&self, x: &DVector<f64>, feature: &Feature) -> f64 {
        match (self.kind, feature) {
            (ProcessKind::Rff, Feature::Fourier { w, phase }) => SQRT_2 * (w.dot(x) + phase).sin(),
            (ProcessKind::LinearGaussian, f) => self.scale * f.weights().dot(x),
            (ProcessKind::ReluRandomFeature, f) => f.weights().dot(x).max(0.0),
            // A Fourier feature fed to a weight process (or vice versa) only
            // arises from hand-built features; fall back to the weight part.
            (ProcessKind::Rff, Feature::Weight(w)) => SQRT_2 * w.dot(x).sin(),
        }
    }

    /// Noiseless `Φ_iα = φ(x_i, w_α)` for given inputs and features.
    pub fn evaluate_matrix(
        &self,
        inputs: &[DVector<f64>],
        features: &[Feature],
    ) -> Result<MeasurementMatrix> {
        let mut data = Vec::with_capacity(inputs.len() * features.len());
        for x in inputs {
            for f in features {
                data.push(self.evaluate_phi(x, f)?);
            }
        }
        MeasurementMatrix::new(inputs.len(), features.len(), data)
    }

    /// Exact kernel `k(x, y)` where a closed form exists (RFF and linear).
    pub fn kernel(&self, x: &DVector<f64>, y: &DVector<f64>) -> Option<f64> {
        match self.kind {
            ProcessKind::Rff => {
                let diff = x - y;
                let sol = cholesky(&self.sigma, "kernel covariance").ok()?.solve(&diff);
                Some((-0.5 * diff.dot(&sol)).exp())
            }
            ProcessKind::LinearGaussian => Some(self.scale * self.scale * x.dot(y)),
            ProcessKind::ReluRandomFeature => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Independent,
    RowColumnCorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma_noise: f64,
    pub trials: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, sigma_noise: 0.0, trials: 1 }
    }

    pub fn independent(sigma_noise: f64, trials: usize) -> Self {
        Self { kind: NoiseKind::Independent, sigma_noise, trials }
    }

    /// Per trial, entry `(i, α)` receives `a_i + b_α` with `a_i, b_α` iid
    /// `N(0, σ²)`, so `Cov(ε_iα, ε_jβ) = σ²(δ_ij + δ_αβ)`.
    pub fn row_column(sigma_noise: f64, trials: usize) -> Self {
        Self { kind: NoiseKind::RowColumnCorrelated, sigma_noise, trials }
    }
}

/// Samples one set of inputs and features, evaluates the noiseless matrix once,
/// and returns one noisy copy per trial.
pub fn build_measurements(
    process: &GenerativeProcess,
    p: usize,
    q: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<MeasurementMatrix>> {
    if noise.trials < 1 {
        return Err(Error::precondition("at least one trial is required"));
    }
    if !(noise.sigma_noise.is_finite() && noise.sigma_noise >= 0.0) {
        return Err(Error::precondition("noise standard deviation must be finite and nonnegative"));
    }
    let inputs = process.sample_inputs(p, seed)?;
    let features = process.sample_features(q, seed)?;
    let base = process.evaluate_matrix(&inputs, &features)?;
    (0..noise.trials).map(|t| add_noise(&base, noise, seed, t)).collect()
}

fn add_noise(
    base: &MeasurementMatrix,
    noise: &NoiseModel,
    seed: u64,
    trial: usize,
) -> Result<MeasurementMatrix> {
    let (p, q) = (base.p(), base.q());
    let sd = noise.sigma_noise;
    let mut rng = rng::stream_rng(seed, rng::noise(trial));
    let mut draw = || sd * rng.sample::<f64, _>(StandardNormal);
    let data: Vec<f64> = match noise.kind {
        NoiseKind::None => base.as_slice().to_vec(),
        NoiseKind::Independent => base.as_slice().iter().map(|v| v + draw()).collect(),
        NoiseKind::RowColumnCorrelated => {
            let rows: Vec<f64> = (0..p).map(|_| draw()).collect();
            let cols: Vec<f64> = (0..q).map(|_| draw()).collect();
            base.as_slice().iter().enumerate().map(|(idx, v)| v + rows[idx / q] + cols[idx % q]).collect()
        }
    };
    Ok(MeasurementMatrix::new(p, q, data)?.with_provenance(trial, seed))
}
