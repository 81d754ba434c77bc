use std::path::Path;

use kernmoment::build_measurements;
use kernmoment::config::ProcessSpec;
use kernmoment::MatrixFormat;
use serde::{Deserialize, Serialize};

use crate::config::{NoiseSpec, RunConfig, Stamp};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, file_sha256, write_json};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub process: ProcessSpec,
    pub p: usize,
    pub q: usize,
    pub noise: NoiseSpec,
    pub format: MatrixFormat,
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub trial: usize,
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let g = cfg.generate.as_ref().ok_or_else(|| CliError::config("missing \"generate\" section"))?;
    let process = g.process.build().map_err(|e| CliError::config(format!("process: {e}")))?;
    if g.p == 0 || g.q == 0 || g.noise.trials == 0 {
        return Err(CliError::config("p, q and noise.trials must be at least 1"));
    }
    let stamp = Stamp::of(cfg);
    let matrices = build_measurements(&process, g.p, g.q, &g.noise.model(), cfg.seed)?;
    ensure_dir(out)?;
    let mut files = Vec::with_capacity(matrices.len());
    for (trial, m) in matrices.iter().enumerate() {
        let name = format!("trial_{trial}.{}", g.format.extension());
        let path = out.join(&name);
        m.save(&path, g.format).map_err(CliError::at(&path))?;
        println!("wrote {}", path.display());
        files.push(ManifestFile { trial, path: name, sha256: file_sha256(&path)? });
    }
    let manifest = Manifest {
        stamp,
        process: g.process.clone(),
        p: g.p,
        q: g.q,
        noise: g.noise,
        format: g.format,
        files,
    };
    write_json(&out.join(MANIFEST), &manifest)
}
