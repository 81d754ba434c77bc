//! `kernmoment`: generate measurement matrices, estimate spectral moments,
//! recover eigenvalues, and run the benchmark and reproduction harnesses.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric or precondition error,
//! 4 I/O error.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kernmoment::estimators::Orientation;
use kernmoment::harness::reproduce::Figure;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "kernmoment", version, about = "Unbiased spectral moments of kernel operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample measurement matrices and write them with a manifest.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate moments from measurement matrices.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated estimator names.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<String>>,
        /// auto, asis or transposed.
        #[arg(long)]
        orientation: Option<Orientation>,
        /// Random permutation repeats for dp.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Recover eigenvalues from a moments file.
    Recover {
        #[command(flatten)]
        common: Common,
    },
    /// Time the DP estimator and fit scaling exponents.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Timing repeats per point.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Run one of the reproduction experiments.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// fig2, fig3left, fig3right or noise_table.
        #[arg(long)]
        figure: Option<Figure>,
        /// Dimension scale in (0, 1].
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn load(common: &Common) -> CliResult<(RunConfig, PathBuf)> {
    let (mut cfg, base) = match &common.config {
        Some(path) => (RunConfig::load(path)?, path.parent().unwrap_or(Path::new(".")).to_path_buf()),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok((cfg, base))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate { common } => {
            let (cfg, _) = load(&common)?;
            commands::generate::run(&cfg, &common.out)
        }
        Command::Estimate { common, estimators, orientation, repeats } => {
            let (mut cfg, base) = load(&common)?;
            let section =
                cfg.estimate.as_mut().ok_or_else(|| CliError::config("missing \"estimate\" section"))?;
            if let Some(e) = estimators {
                section.estimators = e;
            }
            if let Some(o) = orientation {
                section.orientation = o;
            }
            if let Some(r) = repeats {
                section.repeats = r;
            }
            commands::estimate::run(&cfg, &base, &common.out)
        }
        Command::Recover { common } => {
            let (cfg, base) = load(&common)?;
            commands::recover::run(&cfg, &base, &common.out)
        }
        Command::Bench { common, repeats } => {
            let (mut cfg, _) = load(&common)?;
            if let Some(r) = repeats {
                cfg.bench.get_or_insert_with(Default::default).repeats = r;
            }
            commands::bench::run(&cfg, &common.out)
        }
        Command::Reproduce { common, figure, scale, replicates } => {
            let (mut cfg, _) = load(&common)?;
            let section = cfg.reproduce.get_or_insert_with(Default::default);
            if figure.is_some() {
                section.figure = figure;
            }
            if let Some(s) = scale {
                section.scale = s;
            }
            if let Some(r) = replicates {
                section.replicates = r;
            }
            commands::reproduce::run(&cfg, &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kernmoment: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
