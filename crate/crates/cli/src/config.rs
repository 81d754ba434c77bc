//! The JSON run configuration.
//!
//! One file may hold sections for several commands; each command reads its
//! own section plus the shared `seed`. Relative paths inside a config are
//! resolved against the directory of the config file.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "generate": {
//!     "process": { "kind": "rff", "d": 5, "sigma": 0.25 },
//!     "p": 300, "q": 600,
//!     "noise": { "kind": "row_column_correlated", "sigma_noise": 1.0, "trials": 2 },
//!     "format": "csv"
//!   },
//!   "estimate": { "manifest": "out/manifest.json", "n_max": 7, "estimators": ["naive", "dp"] },
//!   "recover": { "moments": "out/moments.csv", "d": 20, "b": 1.0, "k": 10 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use kernmoment::config::ProcessSpec;
use kernmoment::estimators::Orientation;
use kernmoment::harness::bench::BenchConfig;
use kernmoment::harness::reproduce::{Figure, DEFAULT_REPLICATES};
use kernmoment::{MatrixFormat, NoiseKind, NoiseModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recover: Option<RecoverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<ReproduceSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub process: ProcessSpec,
    pub p: usize,
    pub q: usize,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_format")]
    pub format: MatrixFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma_noise: f64,
    #[serde(default = "one")]
    pub trials: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { kind: NoiseKind::None, sigma_noise: 0.0, trials: 1 }
    }
}

impl NoiseSpec {
    pub fn model(&self) -> NoiseModel {
        NoiseModel { kind: self.kind, sigma_noise: self.sigma_noise, trials: self.trials }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    /// Trial matrices in trial order. Ignored when `manifest` is given.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
    /// A manifest written by `generate`; supplies the trial files and, for
    /// the ground-truth column, the process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub n_max: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub kv_center: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverSection {
    /// Moments CSV written by `estimate`.
    pub moments: PathBuf,
    #[serde(default = "default_recover_estimator")]
    pub estimator: String,
    /// Moments recovered the same way for comparison, if present in the file.
    #[serde(default = "default_baseline")]
    pub baseline: String,
    pub d: usize,
    /// Upper end of the spectral grid; derived from the moments when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_count: Option<usize>,
    pub k: usize,
    /// Measurement matrix for the Gram-spectrum column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    /// Process for the ground-truth column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

impl Default for ReproduceSection {
    fn default() -> Self {
        Self { figure: None, scale: default_scale(), replicates: default_replicates() }
    }
}

fn one() -> usize {
    1
}

fn default_format() -> MatrixFormat {
    MatrixFormat::Csv
}

fn default_estimators() -> Vec<String> {
    vec!["dp".into()]
}

fn default_recover_estimator() -> String {
    "dp".into()
}

fn default_baseline() -> String {
    "kv-row".into()
}

fn default_scale() -> f64 {
    1.0
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, after command-line overrides.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Config hash and seed, embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_sha256: String,
    pub seed: u64,
}

impl Stamp {
    pub fn of(cfg: &RunConfig) -> Self {
        Self { config_sha256: cfg.sha256(), seed: cfg.seed }
    }

    /// Comment line heading each CSV table.
    pub fn csv_header(&self) -> String {
        format!("# config_sha256={} seed={}\n", self.config_sha256, self.seed)
    }
}

/// `path` unchanged if absolute, otherwise joined onto `base`.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
