//! Moment sequences `m(1..=n_max)` with estimator provenance.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "kv-row")]
    KvRow,
    #[serde(rename = "kv-col")]
    KvCol,
    #[serde(rename = "exact2")]
    ExactN2,
    #[serde(rename = "dp")]
    Dp,
    #[serde(rename = "dp-alt2")]
    DpAlt2,
    #[serde(rename = "dp-alt-t")]
    DpAltT,
    #[serde(rename = "brute-increasing")]
    BruteForceIncreasing,
    #[serde(rename = "brute-all-paths")]
    BruteForceAllPaths,
    #[serde(rename = "analytic")]
    Analytic,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 10] = [
        EstimatorKind::Naive,
        EstimatorKind::KvRow,
        EstimatorKind::KvCol,
        EstimatorKind::ExactN2,
        EstimatorKind::Dp,
        EstimatorKind::DpAlt2,
        EstimatorKind::DpAltT,
        EstimatorKind::BruteForceIncreasing,
        EstimatorKind::BruteForceAllPaths,
        EstimatorKind::Analytic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Naive => "naive",
            EstimatorKind::KvRow => "kv-row",
            EstimatorKind::KvCol => "kv-col",
            EstimatorKind::ExactN2 => "exact2",
            EstimatorKind::Dp => "dp",
            EstimatorKind::DpAlt2 => "dp-alt2",
            EstimatorKind::DpAltT => "dp-alt-t",
            EstimatorKind::BruteForceIncreasing => "brute-increasing",
            EstimatorKind::BruteForceAllPaths => "brute-all-paths",
            EstimatorKind::Analytic => "analytic",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentMeta {
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub wall_time_s: Option<f64>,
}

/// Values `m(n)` for `n = 1..=n_max`; `values[n - 1]` holds `m(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub estimator: EstimatorKind,
    values: Vec<f64>,
    #[serde(default)]
    pub meta: MomentMeta,
}

#[derive(Serialize, Deserialize)]
struct MomentRow {
    estimator: EstimatorKind,
    n: usize,
    value: f64,
}

impl MomentSequence {
    pub fn new(estimator: EstimatorKind, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::precondition("a moment sequence needs at least m(1)"));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{estimator} m({})", n + 1)));
        }
        Ok(Self { estimator, values, meta: MomentMeta::default() })
    }

    pub fn with_dims(mut self, p: usize, q: usize) -> Self {
        self.meta.p = Some(p);
        self.meta.q = Some(q);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.meta.seed = Some(seed);
        self
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// `m(n)`, or `None` outside `1..=n_max`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn value(&self, n: usize) -> f64 {
        self.get(n).unwrap_or_else(|| panic!("m({n}) not available (n_max = {})", self.n_max()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }

    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        if n_max == 0 || n_max > self.n_max() {
            return Err(Error::precondition(format!("cannot truncate {} moments to {n_max}", self.n_max())));
        }
        Ok(Self { values: self.values[..n_max].to_vec(), ..self.clone() })
    }

    /// Writes `estimator,n,value` rows (with header) for every sequence.
    pub fn write_csv<'a, W: Write>(
        writer: W,
        sequences: impl IntoIterator<Item = &'a MomentSequence>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for seq in sequences {
            for (n, value) in seq.iter() {
                w.serialize(MomentRow { estimator: seq.estimator, n, value })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`MomentSequence::write_csv`]; `#` lines are
    /// treated as comments. Each estimator must list `n = 1..=n_max` in order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<MomentSequence>> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut out: Vec<(EstimatorKind, Vec<f64>)> = Vec::new();
        for row in rdr.deserialize::<MomentRow>() {
            let row = row?;
            let slot = match out.iter_mut().find(|(k, _)| *k == row.estimator) {
                Some(slot) => slot,
                None => {
                    out.push((row.estimator, Vec::new()));
                    out.last_mut().unwrap()
                }
            };
            if row.n != slot.1.len() + 1 {
                return Err(Error::Format(format!(
                    "{}: expected n = {}, found {}",
                    row.estimator,
                    slot.1.len() + 1,
                    row.n
                )));
            }
            slot.1.push(row.value);
        }
        out.into_iter().map(|(k, v)| MomentSequence::new(k, v)).collect()
    }
}
