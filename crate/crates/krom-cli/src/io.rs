//! Artifact I/O: numeric CSV ingestion with precise error locations, CSV and
//! JSON writers with bit-faithful float formatting, and the moments-file
//! schema shared between `ingest` and `simulate`.

use crate::config::{RunConfig, ToolInfo, SCHEMA};
use crate::errors::{CliError, Result};
use krom_core::moments::{SampleMatrix, TargetMoments};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Float formatting.
// ---------------------------------------------------------------------------

/// Scientific notation with 17 significant digits: every f64 round-trips to
/// the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// CSV ingestion.
// ---------------------------------------------------------------------------

/// A parsed numeric CSV: variable names from the header and the data matrix,
/// with the dropped timestamp column (if any) recorded.
#[derive(Debug, Clone)]
pub struct IngestedData {
    pub names: Vec<String>,
    pub sample: SampleMatrix,
    pub dropped_time_col: Option<usize>,
}

fn map_csv_error(path: &Path, err: csv::Error) -> CliError {
    let line = err
        .position()
        .map(csv::Position::line)
        .unwrap_or_default();
    match err.into_kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => CliError::RaggedRows {
            line: pos.map(|p| p.line()).unwrap_or(line),
            got: len as usize,
            expected: expected_len as usize,
        },
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse {
            line,
            column: 0,
            detail: format!("{other:?}"),
        },
    }
}

/// Read a comma-separated, UTF-8, header-mandatory numeric CSV.
///
/// `time_col` drops that 0-based column before parsing; when it is `None` and
/// the first data cell of column 0 is not numeric, column 0 is treated as a
/// timestamp column and dropped automatically. Error locations use 1-based
/// file lines and 1-based original column indices.
pub fn read_numeric_csv(path: &Path, time_col: Option<usize>) -> Result<IngestedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| map_csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();

    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record.map_err(|e| map_csv_error(path, e))?);
    }

    if let Some(col) = time_col {
        if col >= headers.len() {
            return Err(CliError::Config(format!(
                "--time-col {col} out of range: the file has {} columns",
                headers.len()
            )));
        }
    }
    let dropped = time_col.or_else(|| {
        // Auto-detect: a non-numeric leading cell marks a timestamp column.
        records
            .first()
            .and_then(|r| r.get(0))
            .filter(|cell| cell.trim().parse::<f64>().is_err())
            .map(|_| 0)
    });

    let keep: Vec<usize> = (0..headers.len()).filter(|j| Some(*j) != dropped).collect();
    let names: Vec<String> = keep.iter().map(|&j| headers[j].clone()).collect();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    for record in &records {
        let line = record.position().map(csv::Position::line).unwrap_or_default();
        let mut row = Vec::with_capacity(keep.len());
        for &j in &keep {
            let cell = record.get(j).unwrap_or_default();
            let value: f64 = cell.trim().parse().map_err(|e| CliError::Parse {
                line,
                column: j + 1,
                detail: format!("{e}: {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(CliError::NonFinite { line, column: j + 1 });
            }
            row.push(value);
        }
        rows.push(row);
    }

    let sample = SampleMatrix::from_rows(&rows)?;
    Ok(IngestedData {
        names,
        sample,
        dropped_time_col: dropped,
    })
}

// ---------------------------------------------------------------------------
// CSV writing.
// ---------------------------------------------------------------------------

/// Write one CSV record, formatting every float with [`format_float`].
pub fn write_csv_row<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    path: &Path,
    fields: &[String],
) -> Result<()> {
    writer
        .write_record(fields)
        .map_err(|e| map_csv_error(path, e))
}

/// Create a CSV writer for `path`.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| map_csv_error(path, e))
}

/// Finish a CSV file.
pub fn csv_flush(writer: &mut csv::Writer<fs::File>, path: &Path) -> Result<()> {
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Write a full data matrix as CSV: header row, then one record per row with
/// 17-significant-digit floats.
pub fn write_matrix_csv(path: &Path, names: &[String], data: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv_writer(path)?;
    write_csv_row(&mut writer, path, names)?;
    for i in 0..data.nrows() {
        let fields: Vec<String> = (0..data.ncols()).map(|j| format_float(data[(i, j)])).collect();
        write_csv_row(&mut writer, path, &fields)?;
    }
    csv_flush(&mut writer, path)
}

// ---------------------------------------------------------------------------
// JSON artifacts.
// ---------------------------------------------------------------------------

/// Serialize `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("JSON serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Sidecar manifest path: `<artifact>.manifest.json`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

// ---------------------------------------------------------------------------
// Moments files.
// ---------------------------------------------------------------------------

/// Target-moments artifact written by `ingest` and consumed by `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentsArtifact {
    pub schema: &'static str,
    pub tool: ToolInfo,
    pub seed: u64,
    pub config: RunConfig,
    pub n: usize,
    pub m: usize,
    pub variables: Vec<String>,
    pub mu: Vec<f64>,
    /// Covariance matrix, row-major.
    pub v: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
}

impl MomentsArtifact {
    pub fn new(
        seed: u64,
        config: RunConfig,
        names: &[String],
        rows: usize,
        target: &TargetMoments,
    ) -> Self {
        let n = target.n();
        Self {
            schema: SCHEMA,
            tool: ToolInfo::current(),
            seed,
            config,
            n,
            m: rows,
            variables: names.to_vec(),
            mu: target.mu().iter().copied().collect(),
            v: (0..n)
                .map(|i| (0..n).map(|j| target.v()[(i, j)]).collect())
                .collect(),
            tau: target.tau().iter().copied().collect(),
        }
    }
}

/// The fields `simulate` needs back from a moments file; provenance fields
/// are ignored on load.
#[derive(Debug, Deserialize)]
struct MomentsInput {
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    variables: Option<Vec<String>>,
    mu: Vec<f64>,
    v: Vec<Vec<f64>>,
    tau: Vec<f64>,
}

/// Load a moments JSON file, re-validate covariance symmetry (tolerance
/// 1e−12, then symmetrize), and rebuild the target moments.
pub fn read_moments_json(path: &Path) -> Result<(TargetMoments, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let input: MomentsInput = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line() as u64,
        column: e.column(),
        detail: e.to_string(),
    })?;
    if let Some(schema) = &input.schema {
        if schema != SCHEMA {
            return Err(CliError::Config(format!(
                "unsupported schema {schema:?}, expected {SCHEMA:?}"
            )));
        }
    }
    let n = input.mu.len();
    if input.v.len() != n || input.v.iter().any(|row| row.len() != n) || input.tau.len() != n {
        return Err(CliError::Config(format!(
            "moments file is inconsistent: mu has {n} entries, v is {}x{:?}, tau has {}",
            input.v.len(),
            input.v.first().map(Vec::len),
            input.tau.len()
        )));
    }
    let raw = DMatrix::from_fn(n, n, |i, j| input.v[i][j]);
    let asym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (raw[(i, j)] - raw[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > 1e-12 {
        return Err(CliError::Config(format!(
            "covariance matrix is asymmetric by {asym:.3e} (tolerance 1e-12)"
        )));
    }
    let v = (&raw + raw.transpose()) * 0.5;
    let target = TargetMoments::new(DVector::from_vec(input.mu), v, DVector::from_vec(input.tau))?;
    let names = input
        .variables
        .filter(|vars| vars.len() == n)
        .unwrap_or_else(|| default_names(n));
    Ok((target, names))
}

/// Default variable names x1..xn.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("x{j}")).collect()
}
