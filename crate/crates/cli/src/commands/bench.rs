use std::path::Path;

use kernmoment::harness::bench::{run_bench, BenchReport};
use serde::Serialize;

use crate::config::{RunConfig, Stamp};
use crate::error::CliResult;
use crate::output::{ensure_dir, write_json, write_stamped_csv};

#[derive(Debug, Serialize)]
struct BenchOutput<'a> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    #[serde(flatten)]
    report: &'a BenchReport,
}

pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let mut bench = cfg.bench.clone().unwrap_or_default();
    bench.seed = cfg.seed;
    let report = run_bench(&bench)?;
    let stamp = Stamp::of(cfg);
    ensure_dir(out)?;
    write_stamped_csv(&out.join("timings.csv"), &stamp, |w| report.write_csv(w))?;
    write_json(&out.join("bench.json"), &BenchOutput { stamp: &stamp, report: &report })?;
    println!("P exponent {:.2}, n exponent {:.2}", report.p_exponent, report.n_exponent);
    Ok(())
}
