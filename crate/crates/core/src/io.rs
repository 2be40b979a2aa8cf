//! File formats.
//!
//! CSV files are UTF-8 with Unix newlines, a single header row, comma
//! separators and `.` decimals. Numbers are written in the shortest decimal
//! form that parses back to the same `f64`.
//!
//! | file | header |
//! |------|--------|
//! | spectrum | `freq_mhz,signal[,sigma]` |
//! | D series | `temp_k,d_mhz[,sigma_mhz]` |
//! | E series | `temp_k,e_mhz[,sigma_mhz]` |
//! | lattice | `temp_k,a_angstrom,c_angstrom` |
//! | values | `value_mhz` |
//!
//! JSON reports carry a `schema_version` string; readers reject documents
//! whose major version differs from [`SCHEMA_MAJOR`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeRecord;
use crate::lineshape::OdmrSpectrum;
use crate::thermal::{CalibrationModel, Series};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u64 = 1;

pub const SPECTRUM_HEADER: [&str; 2] = ["freq_mhz", "signal"];
pub const SPECTRUM_SIGMA: &str = "sigma";
pub const D_SERIES_HEADER: [&str; 2] = ["temp_k", "d_mhz"];
pub const E_SERIES_HEADER: [&str; 2] = ["temp_k", "e_mhz"];
pub const SERIES_SIGMA: &str = "sigma_mhz";
pub const LATTICE_HEADER: [&str; 3] = ["temp_k", "a_angstrom", "c_angstrom"];
pub const VALUES_HEADER: [&str; 1] = ["value_mhz"];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("input is empty")]
    Empty,

    #[error("unexpected header '{found}', expected '{expected}'")]
    Header { expected: String, found: String },

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported schema version '{0}'")]
    SchemaVersion(String),

    #[error("expected a '{expected}' document, found '{found}'")]
    DocumentType { expected: String, found: String },

    #[error("invalid data: {0}")]
    Data(#[from] crate::Error),
}

/// Shortest round-trip decimal representation.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Reads a CSV table and returns the header plus numeric rows.
fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::Empty);
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| FormatError::Row { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FormatError::Row { line, message: e.to_string() })?;
        let row = rec
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| FormatError::Row { line, message: format!("'{field}' is not a finite number") })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Accepts `required` optionally followed by `optional`; returns whether the
/// optional column is present.
fn check_header(found: &[String], required: &[&str], optional: Option<&str>) -> Result<bool, FormatError> {
    let expected = || {
        let mut e = required.join(",");
        if let Some(o) = optional {
            e.push_str(&format!("[,{o}]"));
        }
        e
    };
    let matches_required = found.len() >= required.len() && found.iter().zip(required).all(|(a, b)| a == b);
    match (matches_required, found.len() - required.len().min(found.len()), optional) {
        (true, 0, _) => Ok(false),
        (true, 1, Some(o)) if found[required.len()] == o => Ok(true),
        _ => Err(FormatError::Header { expected: expected(), found: found.join(",") }),
    }
}

fn columns(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|c| rows.iter().map(|r| r[c]).collect()).collect()
}

pub fn parse_spectrum(text: &str) -> Result<OdmrSpectrum, FormatError> {
    let (header, rows) = read_table(text)?;
    let with_sigma = check_header(&header, &SPECTRUM_HEADER, Some(SPECTRUM_SIGMA))?;
    let mut cols = columns(&rows, if with_sigma { 3 } else { 2 });
    let sigma = with_sigma.then(|| cols.pop().unwrap());
    let signal = cols.pop().unwrap();
    let freqs = cols.pop().unwrap();
    Ok(OdmrSpectrum::new(freqs, signal, sigma)?)
}

pub fn write_spectrum(s: &OdmrSpectrum) -> String {
    let mut out = String::new();
    out.push_str(&SPECTRUM_HEADER.join(","));
    if s.sigma().is_some() {
        out.push(',');
        out.push_str(SPECTRUM_SIGMA);
    }
    out.push('\n');
    for i in 0..s.len() {
        let _ = write!(out, "{},{}", fmt_num(s.freqs()[i]), fmt_num(s.signal()[i]));
        if let Some(sig) = s.sigma() {
            let _ = write!(out, ",{}", fmt_num(sig[i]));
        }
        out.push('\n');
    }
    out
}

/// Which quantity a temperature series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesQuantity {
    D,
    E,
}

impl SeriesQuantity {
    fn header(self) -> [&'static str; 2] {
        match self {
            SeriesQuantity::D => D_SERIES_HEADER,
            SeriesQuantity::E => E_SERIES_HEADER,
        }
    }
}

/// Parses a D-series or E-series file, detecting which from the header.
pub fn parse_series(text: &str) -> Result<(SeriesQuantity, Series), FormatError> {
    let (header, rows) = read_table(text)?;
    let quantity = if header.get(1).map(String::as_str) == Some(E_SERIES_HEADER[1]) {
        SeriesQuantity::E
    } else {
        SeriesQuantity::D
    };
    let with_sigma = check_header(&header, &quantity.header(), Some(SERIES_SIGMA))?;
    let mut cols = columns(&rows, if with_sigma { 3 } else { 2 });
    let sigma = with_sigma.then(|| cols.pop().unwrap());
    let y = cols.pop().unwrap();
    let t = cols.pop().unwrap();
    Ok((quantity, Series::new(t, y, sigma)?))
}

pub fn write_series(quantity: SeriesQuantity, s: &Series) -> String {
    let mut out = quantity.header().join(",");
    if s.sigma.is_some() {
        out.push(',');
        out.push_str(SERIES_SIGMA);
    }
    out.push('\n');
    for i in 0..s.len() {
        let _ = write!(out, "{},{}", fmt_num(s.t[i]), fmt_num(s.y[i]));
        if let Some(sig) = &s.sigma {
            let _ = write!(out, ",{}", fmt_num(sig[i]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_lattice(text: &str) -> Result<Vec<LatticeRecord>, FormatError> {
    let (header, rows) = read_table(text)?;
    check_header(&header, &LATTICE_HEADER, None)?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            LatticeRecord::new(r[0], r[1], r[2]).map_err(|e| FormatError::Row { line: i + 2, message: e.to_string() })
        })
        .collect()
}

pub fn write_lattice(records: &[LatticeRecord]) -> String {
    let mut out = LATTICE_HEADER.join(",");
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{}", fmt_num(r.t), fmt_num(r.a), fmt_num(r.c));
    }
    out
}

pub fn parse_values(text: &str) -> Result<Vec<f64>, FormatError> {
    let (header, rows) = read_table(text)?;
    check_header(&header, &VALUES_HEADER, None)?;
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn write_values(values: &[f64]) -> String {
    let mut out = format!("{}\n", VALUES_HEADER[0]);
    for v in values {
        out.push_str(&fmt_num(*v));
        out.push('\n');
    }
    out
}

/// Tab-separated columns with a header row.
pub fn write_tsv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_num).collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    out
}

/// Saved calibration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDocument {
    pub schema_version: String,
    pub document: String,
    pub model: CalibrationModel,
}

pub const CALIBRATION_DOCUMENT: &str = "calibration";

impl CalibrationDocument {
    pub fn new(model: CalibrationModel) -> Self {
        Self { schema_version: SCHEMA_VERSION.to_owned(), document: CALIBRATION_DOCUMENT.to_owned(), model }
    }
}

/// Rejects documents whose major version differs from [`SCHEMA_MAJOR`].
pub fn check_schema_version(v: &str) -> Result<(), FormatError> {
    let major = v.split('.').next().and_then(|m| m.parse::<u64>().ok());
    if major == Some(SCHEMA_MAJOR) {
        Ok(())
    } else {
        Err(FormatError::SchemaVersion(v.to_owned()))
    }
}

pub fn parse_calibration(text: &str) -> Result<CalibrationModel, FormatError> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    let version = raw.get("schema_version").and_then(|v| v.as_str()).unwrap_or("");
    check_schema_version(version)?;
    let doc: CalibrationDocument = serde_json::from_value(raw)?;
    if doc.document != CALIBRATION_DOCUMENT {
        return Err(FormatError::DocumentType { expected: CALIBRATION_DOCUMENT.into(), found: doc.document });
    }
    Ok(doc.model)
}

pub fn write_calibration(model: &CalibrationModel) -> String {
    to_json(&CalibrationDocument::new(model.clone()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
