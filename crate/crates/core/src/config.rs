//! JSON process specifications.
//!
//! ```json
//! { "kind": "rff", "d": 5, "sigma_x": 1.0, "sigma": 0.25 }
//! { "kind": "linear_gaussian", "d": 20, "scale": 0.5477225575051661 }
//! { "kind": "relu_random_feature", "d": 10, "sigma_x": [1.0, 2.0, …] }
//! ```
//!
//! A covariance is a scalar `c` (meaning `c·I`), a diagonal vector, or a full
//! matrix given by rows. Omitted covariances default to the identity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{GenerativeProcess, ProcessKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Covariance {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl Covariance {
    pub fn to_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        match self {
            Covariance::Scalar(c) => Ok(DMatrix::identity(d, d) * *c),
            Covariance::Diagonal(v) => {
                if v.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, actual: v.len() });
                }
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(v)))
            }
            Covariance::Full(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Format(format!("covariance must be {d}x{d}")));
                }
                Ok(DMatrix::from_row_iterator(d, d, rows.iter().flatten().copied()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<Covariance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Covariance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl ProcessSpec {
    pub fn build(&self) -> Result<GenerativeProcess> {
        if self.d == 0 {
            return Err(Error::precondition("latent dimension d must be at least 1"));
        }
        let cov = |c: &Option<Covariance>| {
            c.as_ref().map_or_else(|| Ok(DMatrix::identity(self.d, self.d)), |c| c.to_matrix(self.d))
        };
        let sigma_x = cov(&self.sigma_x)?;
        match self.kind {
            ProcessKind::Rff => {
                if self.scale.is_some_and(|s| s != 1.0) {
                    return Err(Error::precondition("random Fourier features take no scale"));
                }
                GenerativeProcess::rff(sigma_x, cov(&self.sigma)?)
            }
            kind => {
                if self.sigma.is_some() {
                    return Err(Error::precondition("sigma applies to random Fourier features only"));
                }
                GenerativeProcess::weighted(kind, sigma_x, self.scale.unwrap_or(1.0))
            }
        }
    }
}
