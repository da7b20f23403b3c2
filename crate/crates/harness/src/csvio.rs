//! CSV and coefficient-file output.
//!
//! Floats are written in Rust's shortest round-trip exponential form, so
//! re-reading a table reproduces the values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// A CSV table with a header row, comma separated, full-precision floats.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: &[CsvCell]) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        self.rows
            .push(cells.iter().map(|c| c.to_string()).collect());
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// One table cell.
pub enum CsvCell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl std::fmt::Display for CsvCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsvCell::Float(v) => write!(f, "{v:e}"),
            CsvCell::Int(v) => write!(f, "{v}"),
            CsvCell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for CsvCell {
    fn from(v: f64) -> Self {
        CsvCell::Float(v)
    }
}

impl From<usize> for CsvCell {
    fn from(v: usize) -> Self {
        CsvCell::Int(v as i64)
    }
}

/// Parse a CSV written by [`CsvTable::write`]: header plus float-or-text
/// cells (floats parse exactly by round-trip).
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(|s| s.to_string()).collect())
        .unwrap_or_default();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| cell.parse::<f64>().unwrap_or(f64::NAN))
            .collect();
        rows.push(row);
    }
    Ok((header, rows))
}

/// Dump converged chaos coefficients: a header line `P N fingerprint`, then
/// one line per chaos index with the spatial coefficients space-separated.
pub fn write_coefficients(
    path: &Path,
    chaos_len: usize,
    spatial_len: usize,
    fingerprint: u64,
    data: &[f64],
) -> std::io::Result<()> {
    assert_eq!(data.len(), chaos_len * spatial_len);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{chaos_len} {spatial_len} {fingerprint:016x}")?;
    for block in data.chunks(spatial_len) {
        let mut first = true;
        for v in block {
            if !first {
                write!(out, " ")?;
            }
            write!(out, "{v:e}")?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Dump a per-point solve ensemble: point coordinates then the eigenvalues.
pub fn write_ensemble(
    path: &Path,
    points: &[Vec<f64>],
    lambdas: &[Vec<f64>],
) -> std::io::Result<()> {
    assert_eq!(points.len(), lambdas.len());
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let dims = points.first().map_or(0, |p| p.len());
    let count = lambdas.first().map_or(0, |l| l.len());
    let mut out = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = (1..=dims).map(|m| format!("xi_{m}")).collect();
    header.extend((1..=count).map(|i| format!("lambda_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (p, l) in points.iter().zip(lambdas) {
        let cells: Vec<String> = p.iter().chain(l.iter()).map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join("shell-spectra-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut t = CsvTable::new(&["a", "b"]);
        let values = [
            (1.0 / 3.0, 2.5e-13),
            (std::f64::consts::PI, -7.25),
            (6.02e23, f64::MIN_POSITIVE),
        ];
        for (a, b) in values {
            t.push(&[a.into(), b.into()]);
        }
        t.write(&path).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["a", "b"]);
        for ((a, b), row) in values.iter().zip(&rows) {
            assert_eq!(*a, row[0]);
            assert_eq!(*b, row[1]);
        }
        std::fs::remove_file(&path).ok();
    }
}
