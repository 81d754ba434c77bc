use std::path::Path;

use kernmoment::harness::reproduce::{reproduce, ReproduceConfig, ReproduceReport};
use serde::Serialize;

use crate::config::{RunConfig, Stamp};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, write_stamped_csv};

#[derive(Debug, Serialize)]
struct ReproduceOutput<'a> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    #[serde(flatten)]
    report: &'a ReproduceReport,
}

pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let section = cfg.reproduce.clone().unwrap_or_default();
    let figure = section
        .figure
        .ok_or_else(|| CliError::config("no figure given: use --figure or \"reproduce.figure\""))?;
    let rc = ReproduceConfig::new(figure, section.scale, section.replicates, cfg.seed)
        .map_err(|e| CliError::config(e.to_string()))?;
    let report = reproduce(&rc)?;
    let stamp = Stamp::of(cfg);
    ensure_dir(out)?;
    let name = figure.name();
    if !report.moments.is_empty() {
        write_stamped_csv(&out.join(format!("{name}_moments.csv")), &stamp, |w| report.write_moments_csv(w))?;
    }
    if !report.eigenvalues.is_empty() {
        write_stamped_csv(&out.join(format!("{name}_eigenvalues.csv")), &stamp, |w| {
            report.write_eigenvalues_csv(w)
        })?;
    }
    if !report.errors.is_empty() {
        write_stamped_csv(&out.join(format!("{name}_errors.csv")), &stamp, |w| report.write_errors_csv(w))?;
    }
    write_json(&out.join(format!("{name}.json")), &ReproduceOutput { stamp: &stamp, report: &report })
}
