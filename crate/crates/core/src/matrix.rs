//! Dense measurement matrices and their on-disk formats.
//!
//! Two formats are supported:
//!
//! * CSV: one line per matrix row, comma separated, `.` decimal point, no
//!   header. Values are written with the shortest representation that
//!   round-trips exactly.
//! * KMM1 binary: the ASCII magic `KMM1`, then `P` and `Q` as little-endian
//!   `u64`, then `P·Q` little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KMM1_MAGIC: &[u8; 4] = b"KMM1";

/// A `P×Q` matrix of sampled entries `Φ_iα`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    data: Vec<f64>,
    p: usize,
    q: usize,
    pub trial_id: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Kmm1,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Kmm1 => "kmm",
        }
    }
}

impl MeasurementMatrix {
    pub fn new(p: usize, q: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::precondition("matrix must have at least one row and column"));
        }
        if data.len() != p * q {
            return Err(Error::DimensionMismatch { expected: p * q, actual: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry ({}, {})", pos / q, pos % q)));
        }
        Ok(Self { data, p, q, trial_id: 0, seed: 0 })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.len();
        let q = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(p * q);
        for row in rows {
            let row = row.as_ref();
            if row.len() != q {
                return Err(Error::DimensionMismatch { expected: q, actual: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(p, q, data)
    }

    pub fn filled(p: usize, q: usize, value: f64) -> Result<Self> {
        Self::new(p, q, vec![value; p * q])
    }

    pub fn with_provenance(mut self, trial_id: usize, seed: u64) -> Self {
        self.trial_id = trial_id;
        self.seed = seed;
        self
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn get(&self, i: usize, alpha: usize) -> f64 {
        self.data[i * self.q + alpha]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for alpha in 0..self.q {
            data.extend((0..self.p).map(|i| self.get(i, alpha)));
        }
        Self { data, p: self.q, q: self.p, trial_id: self.trial_id, seed: self.seed }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// Entry `(i, α)` of the result is `Φ[rows[i], cols[α]]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        debug_assert_eq!(rows.len(), self.p);
        debug_assert_eq!(cols.len(), self.q);
        let mut data = Vec::with_capacity(self.data.len());
        for &r in rows {
            let src = self.row(r);
            data.extend(cols.iter().map(|&c| src[c]));
        }
        Self { data, ..self.clone() }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.q) {
            return Err(Error::precondition(format!("column {bad} out of range")));
        }
        let mut data = Vec::with_capacity(self.p * cols.len());
        for i in 0..self.p {
            let src = self.row(i);
            data.extend(cols.iter().map(|&c| src[c]));
        }
        Ok(Self::new(self.p, cols.len(), data)?.with_provenance(self.trial_id, self.seed))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.q, &self.data)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.p == other.p && self.q == other.q
    }

    // ---------------------------------------------------------------- I/O

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = BufWriter::new(writer);
        for i in 0..self.p {
            for (alpha, v) in self.row(i).iter().enumerate() {
                if alpha > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{v:?}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", rows.len() + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write_kmm1<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = BufWriter::new(writer);
        out.write_all(KMM1_MAGIC)?;
        out.write_all(&(self.p as u64).to_le_bytes())?;
        out.write_all(&(self.q as u64).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_kmm1<R: Read>(reader: R) -> Result<Self> {
        let mut input = BufReader::new(reader);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != KMM1_MAGIC {
            return Err(Error::Format("missing KMM1 magic".into()));
        }
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let p = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let q = u64::from_le_bytes(word) as usize;
        let len = p.checked_mul(q).ok_or_else(|| Error::Format("KMM1 dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after KMM1 payload".into()));
        }
        Self::new(p, q, data)
    }

    pub fn save(&self, path: &Path, format: MatrixFormat) -> Result<()> {
        let file = File::create(path)?;
        match format {
            MatrixFormat::Csv => self.write_csv(file),
            MatrixFormat::Kmm1 => self.write_kmm1(file),
        }
    }

    /// Reads a matrix, choosing the format from the leading magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let mut file = File::open(path)?;
        let mut head = [0u8; 4];
        let n = file.read(&mut head)?;
        let file = File::open(path)?;
        if n == 4 && &head == KMM1_MAGIC {
            Self::read_kmm1(file)
        } else {
            Self::read_csv(file)
        }
    }
}
