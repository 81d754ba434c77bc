use std::fs;
use std::path::{Path, PathBuf};

use kernmoment::analytic::ground_truth_moments;
use kernmoment::config::ProcessSpec;
use kernmoment::estimators::{estimate, EstimateOptions};
use kernmoment::{EstimatorKind, MeasurementMatrix, MomentSequence};
use serde::Serialize;

use super::generate::Manifest;
use crate::config::{resolve, EstimateSection, RunConfig, Stamp};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, write_stamped_csv};

#[derive(Debug, Serialize)]
struct EstimateOutput<'a> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    p: usize,
    q: usize,
    trials: usize,
    inputs: Vec<String>,
    sequences: &'a [MomentSequence],
    ground_truth: Option<&'a MomentSequence>,
}

/// A requested estimator. `dp-alt` picks the two-trial or `T`-trial variant
/// from the number of input files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Selection {
    Kind(EstimatorKind),
    DpAlt,
}

fn parse_selection(name: &str) -> CliResult<Selection> {
    if name == "dp-alt" {
        return Ok(Selection::DpAlt);
    }
    match name.parse::<EstimatorKind>() {
        Ok(EstimatorKind::Analytic) => Err(CliError::config(
            "\"analytic\" is not an estimator; ground truth is added when the process is known",
        )),
        Ok(kind) => Ok(Selection::Kind(kind)),
        Err(e) => Err(CliError::config(e.to_string())),
    }
}

fn inputs(e: &EstimateSection, base: &Path) -> CliResult<(Vec<PathBuf>, Option<ProcessSpec>)> {
    let Some(manifest) = &e.manifest else {
        let paths = e.inputs.iter().map(|p| resolve(base, p)).collect();
        return Ok((paths, e.process.clone()));
    };
    let path = resolve(base, manifest);
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|err| CliError::Io(format!("{}: {err}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let paths = manifest.files.iter().map(|f| dir.join(&f.path)).collect();
    Ok((paths, e.process.clone().or(Some(manifest.process))))
}

pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> CliResult<()> {
    let e = cfg.estimate.as_ref().ok_or_else(|| CliError::config("missing \"estimate\" section"))?;
    if e.n_max == 0 || e.repeats == 0 {
        return Err(CliError::config("n_max and repeats must be at least 1"));
    }
    let selections = e.estimators.iter().map(|s| parse_selection(s)).collect::<CliResult<Vec<_>>>()?;
    if selections.is_empty() {
        return Err(CliError::config("no estimators selected"));
    }
    let (paths, process) = inputs(e, base)?;
    if paths.is_empty() {
        return Err(CliError::config("no input matrices: set \"inputs\" or \"manifest\""));
    }
    let process = process
        .map(|spec| spec.build())
        .transpose()
        .map_err(|err| CliError::config(format!("process: {err}")))?;
    let matrices = paths
        .iter()
        .map(|p| MeasurementMatrix::load(p).map_err(CliError::at(p)))
        .collect::<CliResult<Vec<_>>>()?;

    let opts = EstimateOptions {
        orientation: e.orientation,
        repeats: e.repeats,
        seed: cfg.seed,
        kv_center: e.kv_center,
    };
    let mut sequences = Vec::with_capacity(selections.len());
    for sel in selections {
        let kind = match sel {
            Selection::Kind(k) => k,
            Selection::DpAlt if matrices.len() < 2 => {
                return Err(CliError::Numeric(kernmoment::Error::Precondition(format!(
                    "dp-alt needs at least two trial files, got {}",
                    matrices.len()
                ))))
            }
            Selection::DpAlt if matrices.len() == 2 => EstimatorKind::DpAlt2,
            Selection::DpAlt => EstimatorKind::DpAltT,
        };
        // The closed form stops at the second moment.
        let n_max = if kind == EstimatorKind::ExactN2 { e.n_max.min(2) } else { e.n_max };
        sequences.push(estimate(kind, &matrices, n_max, &opts)?.with_seed(cfg.seed));
    }
    let truth = process.and_then(|p| ground_truth_moments(&p, e.n_max));

    let stamp = Stamp::of(cfg);
    ensure_dir(out)?;
    write_stamped_csv(&out.join("moments.csv"), &stamp, |w| {
        MomentSequence::write_csv(w, sequences.iter().chain(truth.as_ref()))
    })?;
    let first = &matrices[0];
    write_json(
        &out.join("moments.json"),
        &EstimateOutput {
            stamp: &stamp,
            p: first.p(),
            q: first.q(),
            trials: matrices.len(),
            inputs: paths.iter().map(|p| p.display().to_string()).collect(),
            sequences: &sequences,
            ground_truth: truth.as_ref(),
        },
    )?;
    for s in &sequences {
        println!("{:>16}  {:.3}s", s.estimator.name(), s.meta.wall_time_s.unwrap_or_default());
    }
    Ok(())
}
