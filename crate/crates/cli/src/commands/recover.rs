use std::fs::File;
use std::path::Path;

use kernmoment::analytic::{linear_spectrum, rbf_top_eigenvalues, RbfSpectrumSpec};
use kernmoment::estimators::gram_spectrum;
use kernmoment::recovery::{default_bound, recover, RecoveryConfig, SpectralGrid, DEFAULT_GRID};
use kernmoment::{EstimatorKind, GenerativeProcess, MeasurementMatrix, MomentSequence, ProcessKind};
use serde::Serialize;

use crate::config::{resolve, RecoverSection, RunConfig, Stamp};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, write_stamped_csv};

#[derive(Debug, Serialize)]
struct Row {
    index: usize,
    gt: Option<f64>,
    svd: Option<f64>,
    kv: Option<f64>,
    ours: f64,
}

#[derive(Debug, Serialize)]
struct Fit<'a> {
    estimator: &'a str,
    b: f64,
    objective: f64,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct RecoverOutput<'a> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    d: usize,
    t_count: usize,
    k: usize,
    ours: Fit<'a>,
    baseline: Option<Fit<'a>>,
    svd: Option<Vec<f64>>,
    ground_truth: Option<Vec<f64>>,
}

fn padded(mut values: Vec<f64>, d: usize) -> Vec<f64> {
    values.truncate(d);
    values.resize(d, 0.0);
    values
}

fn true_spectrum(process: &GenerativeProcess, d: usize) -> CliResult<Option<Vec<f64>>> {
    Ok(match process.kind() {
        ProcessKind::LinearGaussian => linear_spectrum(process).map(|l| padded(l.values().to_vec(), d)),
        ProcessKind::Rff => {
            let spec = RbfSpectrumSpec::from_covariances(process.sigma_x(), process.sigma())?;
            Some(rbf_top_eigenvalues(&spec, d)?.values().to_vec())
        }
        ProcessKind::ReluRandomFeature => None,
    })
}

fn fit(r: &RecoverSection, m: &MomentSequence) -> CliResult<(SpectralGrid, Vec<f64>)> {
    let b = match r.b {
        Some(b) => b,
        None => default_bound(m, r.k.min(m.n_max()))?,
    };
    let t = r.t_count.unwrap_or(DEFAULT_GRID.max(r.d));
    let rc = RecoveryConfig::new(r.d, b, t, r.k).map_err(|e| CliError::config(e.to_string()))?;
    let (grid, eig) = recover(m, &rc)?;
    Ok((grid, eig.values().to_vec()))
}

fn parse_kind(name: &str) -> CliResult<EstimatorKind> {
    name.parse().map_err(|e: kernmoment::Error| CliError::config(e.to_string()))
}

pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> CliResult<()> {
    let r = cfg.recover.as_ref().ok_or_else(|| CliError::config("missing \"recover\" section"))?;
    let kind = parse_kind(&r.estimator)?;
    let baseline_kind = parse_kind(&r.baseline)?;
    let process = r
        .process
        .as_ref()
        .map(|spec| spec.build())
        .transpose()
        .map_err(|e| CliError::config(format!("process: {e}")))?;

    let path = resolve(base, &r.moments);
    let file = File::open(&path).map_err(CliError::io(&path))?;
    let sequences = MomentSequence::read_csv(file).map_err(CliError::at(&path))?;
    let find = |k: EstimatorKind| sequences.iter().find(|s| s.estimator == k);
    let ours = find(kind).ok_or_else(|| {
        CliError::Numeric(kernmoment::Error::Precondition(format!(
            "{} has no {} moments",
            path.display(),
            kind
        )))
    })?;
    let (grid, ours_eig) = fit(r, ours)?;
    let baseline = match find(baseline_kind) {
        Some(m) if baseline_kind != kind && m.n_max() >= r.k => Some(fit(r, m)?),
        _ => None,
    };
    let svd = match &r.matrix {
        Some(m) => {
            let mpath = resolve(base, m);
            let m = MeasurementMatrix::load(&mpath).map_err(CliError::at(&mpath))?;
            Some(padded(gram_spectrum(&m), r.d))
        }
        None => None,
    };
    let gt = match &process {
        Some(p) => true_spectrum(p, r.d)?,
        None => None,
    };

    let stamp = Stamp::of(cfg);
    ensure_dir(out)?;
    let rows: Vec<Row> = (0..r.d)
        .map(|i| Row {
            index: i + 1,
            gt: gt.as_ref().map(|v| v[i]),
            svd: svd.as_ref().map(|v| v[i]),
            kv: baseline.as_ref().map(|(_, v)| v[i]),
            ours: ours_eig[i],
        })
        .collect();
    write_stamped_csv(&out.join("recovered.csv"), &stamp, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for row in &rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    write_stamped_csv(&out.join("density.csv"), &stamp, |w| {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        csv.write_record(["point", "weight"])?;
        for (s, p) in grid.points().iter().zip(grid.weights()) {
            csv.write_record([s.to_string(), p.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let fit_of = |name, (g, eig): &(SpectralGrid, Vec<f64>)| Fit {
        estimator: name,
        b: g.b(),
        objective: g.objective(),
        eigenvalues: eig.clone(),
    };
    write_json(
        &out.join("recovery.json"),
        &RecoverOutput {
            stamp: &stamp,
            d: r.d,
            t_count: grid.t_count(),
            k: r.k,
            ours: fit_of(kind.name(), &(grid.clone(), ours_eig.clone())),
            baseline: baseline.as_ref().map(|b| fit_of(baseline_kind.name(), b)),
            svd,
            ground_truth: gt,
        },
    )?;
    println!("objective {:.3e}", grid.objective());
    Ok(())
}
