//! Unbiased spectral moment estimation for kernel integral operators.
//!
//! A measurement matrix `Φ_iα = φ(x_i, w_α)` over sampled inputs and features
//! determines the Gram matrix `K = ΦΦᵀ/Q`, whose trace powers are biased
//! estimates of the operator moments `m(n) = Σ_l λ_lⁿ`. The
//! [`estimators::dp_moments`] estimator averages disjoint cyclic path products
//! instead and is unbiased for every finite `P` and `Q`.

pub mod analytic;
pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod matrix;
pub mod moments;
pub mod process;
pub mod recovery;
pub mod rng;
pub mod sum;

pub use error::{Error, Result};
pub use matrix::{MatrixFormat, MeasurementMatrix};
pub use moments::{EstimatorKind, MomentMeta, MomentSequence};
pub use process::{build_measurements, GenerativeProcess, NoiseKind, NoiseModel, ProcessKind};
