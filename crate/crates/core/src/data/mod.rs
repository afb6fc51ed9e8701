//! Subject time-series, standardization, window extraction and dataset
//! ingestion.

mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;

pub use synth::{synth_generate, PlantedTruth, SynthConfig};

/// Window length used throughout the original experiments.
pub const DEFAULT_WINDOW: usize = 30;

/// One subject's ROI time-series (`L x R`, time as rows).
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub site: String,
    /// 1 = positive class.
    pub label: u8,
    pub series: Matrix,
}

/// A `T x R` slice of a subject's series.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub x: Matrix,
    /// The row right after the window, when one exists and was requested.
    pub target: Option<Vec<f64>>,
    pub label: u8,
    pub subject_id: String,
}

/// Centers and scales every column by its own mean and population standard
/// deviation (denominator `L`).
pub fn standardize(series: &Matrix) -> Result<Matrix> {
    let (l, r) = series.shape();
    if l < 2 {
        return Err(Error::Data(format!("cannot standardize a series with {l} time points")));
    }
    let mut out = series.clone();
    for c in 0..r {
        let mean = (0..l).map(|t| series.get(t, c)).sum::<f64>() / l as f64;
        let var = (0..l).map(|t| (series.get(t, c) - mean).powi(2)).sum::<f64>() / l as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
            return Err(Error::Data(format!("ROI {c} is constant and cannot be standardized")));
        }
        for t in 0..l {
            out.set(t, c, (series.get(t, c) - mean) / sd);
        }
    }
    Ok(out)
}

/// All length-`window` contiguous slices of a subject's series.
///
/// With `require_target` each window also carries the following row, which
/// leaves `L - T` windows; without it there are `L - T + 1`.
pub fn make_windows(subject: &SubjectRecord, window: usize, require_target: bool) -> Result<Vec<WindowSample>> {
    let l = subject.series.rows();
    let needed = window + usize::from(require_target);
    if window == 0 || l < needed {
        return Err(Error::Data(format!(
            "subject {}: series of length {l} is too short for windows of {window}{}",
            subject.subject_id,
            if require_target { " plus a target row" } else { "" }
        )));
    }
    let count = l - needed + 1;
    Ok((0..count)
        .map(|s| WindowSample {
            x: subject.series.slice_rows(s, s + window),
            target: require_target.then(|| subject.series.row(s + window).to_vec()),
            label: subject.label,
            subject_id: subject.subject_id.clone(),
        })
        .collect())
}

/// Every length-`window` slice of every subject, in subject order. These are
/// the samples stacked by the tensor baseline.
pub fn window_series(subjects: &[SubjectRecord], window: usize) -> Result<Vec<Matrix>> {
    let mut out = Vec::new();
    for subject in subjects {
        out.extend(make_windows(subject, window, false)?.into_iter().map(|w| w.x));
    }
    Ok(out)
}

/// One entry of a dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub site: String,
    pub label: i64,
    /// Relative paths resolve against the manifest's directory.
    pub csv_path: PathBuf,
}

/// Reads a manifest (JSON array of [`ManifestEntry`]) and every CSV it
/// names, validates them and standardizes each subject.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Vec<SubjectRecord>> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| Error::json(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut out: Vec<SubjectRecord> = Vec::with_capacity(entries.len());
    for e in entries {
        let label = match e.label {
            0 => 0,
            1 => 1,
            other => {
                return Err(Error::Data(format!("subject {}: label {other} is not 0 or 1", e.subject_id)));
            }
        };
        if out.iter().any(|s| s.subject_id == e.subject_id) {
            return Err(Error::Data(format!("subject {} listed twice", e.subject_id)));
        }
        let path = if e.csv_path.is_absolute() { e.csv_path.clone() } else { base.join(&e.csv_path) };
        let raw = read_series_csv(&path).map_err(|err| match err {
            Error::Data(msg) => Error::Data(format!("subject {}: {msg}", e.subject_id)),
            Error::Io { path, source } => Error::Data(format!("subject {}: {}: {source}", e.subject_id, path.display())),
            other => other,
        })?;
        if let Some(first) = out.first() {
            if first.series.cols() != raw.cols() {
                return Err(Error::Data(format!(
                    "subject {} has {} ROIs, subject {} has {}",
                    e.subject_id,
                    raw.cols(),
                    first.subject_id,
                    first.series.cols()
                )));
            }
        }
        let series = standardize(&raw).map_err(|err| Error::Data(format!("subject {}: {err}", e.subject_id)))?;
        out.push(SubjectRecord { subject_id: e.subject_id, site: e.site, label, series });
    }
    Ok(out)
}

/// Parses a time-by-ROI CSV. A first row that does not parse as numbers is
/// taken as a header. Rows and columns in messages are 1-based data rows.
pub fn read_series_csv(path: &Path) -> Result<Matrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if i == 0 && rec.iter().all(|c| c.parse::<f64>().is_err()) {
            width = Some(rec.len());
            continue;
        }
        let row_no = rows.len() + 1;
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("{}: row {row_no}, column {}: `{cell}` is not a number", path.display(), j + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{}: row {row_no}, column {}: value is {v}", path.display(), j + 1)));
            }
            row.push(v);
        }
        match width {
            Some(w) if w != row.len() => {
                return Err(Error::Data(format!(
                    "{}: row {row_no} has {} columns, expected {w}",
                    path.display(),
                    row.len()
                )))
            }
            _ => width = Some(row.len()),
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Matrix::from_rows(&rows)
}

/// Writes a series as a headerless CSV using shortest round-trip float
/// formatting.
pub fn write_series_csv(path: &Path, series: &Matrix) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 20);
    for t in 0..series.rows() {
        let row: Vec<String> = series.row(t).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
