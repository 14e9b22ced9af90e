//! CSV/JSON reading and writing for matrices, experiment tables and run manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CocaError, Result};
use crate::evalkit::ExperimentReport;
use crate::nonparanormal::RNG_NAME;
use crate::rank_stats::DataMatrix;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Read a numeric matrix. Empty or non-numeric fields are rejected.
pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    let what = if field.is_empty() {
                        "missing value"
                    } else {
                        "non-numeric value"
                    };
                    CocaError::InvalidData(format!("{what} {field:?} at row {}, column {}", i + 1, j + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(CocaError::InvalidData(format!("{} has no data", path.display())));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

pub fn read_data_csv(path: &Path, has_header: bool) -> Result<DataMatrix> {
    DataMatrix::new(read_matrix_csv(path, has_header)?)
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// `{"kind": ..., "d": ..., "matrix": [[row], ...]}`.
pub fn matrix_json(kind: impl Serialize, m: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect();
    json!({ "kind": kind, "d": m.ncols(), "matrix": rows })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub const TABLE_HEADER: [&str; 9] = [
    "method",
    "n",
    "r",
    "estimator",
    "mean",
    "sd",
    "replicates",
    "excluded",
    "oracle_delta",
];

/// One row per cell in the layout `method, n, r, estimator, mean, sd`,
/// followed by the replicate and exclusion counts and the oracle tuning value.
pub fn write_table_csv(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TABLE_HEADER)?;
    for cell in &report.cells {
        let s = &cell.summary;
        w.write_record([
            s.key.method.label().to_string(),
            s.key.n.to_string(),
            fmt_f64(s.key.r),
            s.key.estimator.label().to_string(),
            fmt_f64(s.mean),
            fmt_f64(s.sd),
            s.replicates.to_string(),
            s.excluded.to_string(),
            fmt_f64(s.oracle_delta),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// ROC points, one file per `(scheme, method, r)`; returns the paths written.
pub fn write_roc_csvs(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let mut groups: Vec<(String, Vec<&crate::evalkit::CellReport>)> = Vec::new();
    for cell in &report.cells {
        let k = &cell.summary.key;
        let name = format!(
            "roc_scheme{}_{}_r{}.csv",
            u8::from(k.scheme),
            k.method.label().to_lowercase(),
            fmt_f64(k.r)
        );
        match groups.iter_mut().find(|(n, _)| *n == name) {
            Some((_, cells)) => cells.push(cell),
            None => groups.push((name, vec![cell])),
        }
    }
    let mut written = Vec::new();
    for (name, cells) in groups {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["estimator", "n", "delta", "fpr", "tpr", "count", "auc"])?;
        for cell in cells {
            let auc = cell.roc.auc.map(fmt_f64).unwrap_or_default();
            for p in &cell.roc.points {
                w.write_record([
                    cell.summary.key.estimator.label().to_string(),
                    cell.summary.key.n.to_string(),
                    fmt_f64(p.delta),
                    fmt_f64(p.fpr),
                    fmt_f64(p.tpr),
                    p.count.to_string(),
                    auc.clone(),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Run record written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub rng: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub outputs: Vec<String>,
    /// Command-specific results, e.g. exclusion counts or convergence status.
    pub summary: Option<Value>,
    pub created_unix_seconds: u64,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            rng: RNG_NAME,
            seed,
            config,
            outputs: Vec::new(),
            summary: None,
            created_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}
