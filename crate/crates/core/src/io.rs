//! Dataset readers and writers for the CSV and raw binary formats, plus the
//! plain-text result files.
//!
//! Binary layout (little endian): `n: u64`, `d: u64`, then `n*d` row-major
//! `f64` features. Labels, when present, live next to the data file with the
//! extension replaced by `.labels`, as `n` consecutive `i64`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{GpacError, Result};
use crate::partition::FuzzyPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Binary,
}

impl FromStr for DataFormat {
    type Err = GpacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "bin" | "binary" => Ok(DataFormat::Binary),
            other => Err(GpacError::InvalidConfig(format!("unknown data format {other:?}"))),
        }
    }
}

impl DataFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => DataFormat::Binary,
            _ => DataFormat::Csv,
        }
    }
}

pub fn load_dataset(path: &Path, format: DataFormat, label_column: Option<usize>) -> Result<Dataset> {
    match format {
        DataFormat::Csv => load_csv(path, label_column),
        DataFormat::Binary => load_binary(path),
    }
}

fn parse_label(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v = field.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// One sample per line, comma separated. Lines starting with `#` are skipped.
pub fn load_csv(path: &Path, label_column: Option<usize>) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| GpacError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| GpacError::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(GpacError::parse(
                    path,
                    format!("line {line}: {} fields, expected {w}", record.len()),
                ))
            }
            _ => {}
        }
        if let Some(col) = label_column {
            if col >= record.len() {
                return Err(GpacError::parse(
                    path,
                    format!("line {line}: label column {col} missing"),
                ));
            }
        }
        for (idx, field) in record.iter().enumerate() {
            if Some(idx) == label_column {
                labels.push(parse_label(field).ok_or_else(|| {
                    GpacError::parse(path, format!("line {line}: label {field:?} is not an integer"))
                })?);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    GpacError::parse(
                        path,
                        format!("line {line}, column {idx}: {field:?} is not a number"),
                    )
                })?;
                features.push(v);
            }
        }
        n += 1;
    }
    let w = width.unwrap_or(0);
    let d = w - usize::from(label_column.is_some());
    let labels = label_column.map(|_| labels);
    Dataset::new(features, n, d, labels).map_err(|e| GpacError::parse(path, e.to_string()))
}

/// Features as CSV, with the label (if any) appended as the last column.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    for (i, row) in data.rows().enumerate() {
        for (t, v) in row.iter().enumerate() {
            if t > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("write to String");
        }
        if let Some(l) = data.labels() {
            write!(out, ",{}", l[i]).expect("write to String");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| GpacError::io(path, e))
}

pub fn labels_path_for(path: &Path) -> PathBuf {
    path.with_extension("labels")
}

pub fn write_binary(path: &Path, data: &Dataset) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * data.features().len());
    buf.extend_from_slice(&(data.n() as u64).to_le_bytes());
    buf.extend_from_slice(&(data.d() as u64).to_le_bytes());
    for v in data.features() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| GpacError::io(path, e))?;
    if let Some(labels) = data.labels() {
        let lp = labels_path_for(path);
        let bytes: Vec<u8> = labels.iter().flat_map(|l| l.to_le_bytes()).collect();
        fs::write(&lp, bytes).map_err(|e| GpacError::io(lp, e))?;
    }
    Ok(())
}

pub fn load_binary(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| GpacError::io(path, e))?;
    if bytes.len() < 16 {
        return Err(GpacError::parse(path, "truncated header"));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (n, d) = (word(0) as usize, word(1) as usize);
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(GpacError::parse(
            path,
            format!("header says {n}x{d} but file holds {} bytes", bytes.len()),
        ));
    }
    let features = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let lp = labels_path_for(path);
    let labels = if lp.exists() {
        let lb = fs::read(&lp).map_err(|e| GpacError::io(&lp, e))?;
        if lb.len() != 8 * n {
            return Err(GpacError::parse(
                &lp,
                format!("expected {} bytes of labels, found {}", 8 * n, lb.len()),
            ));
        }
        Some(
            lb.chunks_exact(8)
                .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        )
    } else {
        None
    };
    Dataset::new(features, n, d, labels).map_err(|e| GpacError::parse(path, e.to_string()))
}

/// One cluster id per line.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").expect("write to String");
    }
    fs::write(path, out).map_err(|e| GpacError::io(path, e))
}

/// Membership matrix as CSV with 17 significant digits per value.
pub fn write_probs(path: &Path, probs: &FuzzyPartition) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| GpacError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for i in 0..probs.n() {
        let line = probs
            .row(i)
            .iter()
            .map(|p| format!("{p:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}").map_err(|e| GpacError::io(path, e))?;
    }
    w.flush().map_err(|e| GpacError::io(path, e))
}

pub fn read_probs(path: &Path) -> Result<FuzzyPartition> {
    let data = load_csv(path, None)?;
    FuzzyPartition::new(data.features().to_vec(), data.n(), data.d())
        .map_err(|e| GpacError::parse(path, e.to_string()))
}
