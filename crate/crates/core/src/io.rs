//! Plain-text exchange format for dense matrices and vectors: one row per
//! line, entries as decimal literals separated by single spaces, no header.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Mat;

pub fn parse_matrix(text: &str) -> Result<Mat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for token in trimmed.split_whitespace() {
            let value: f64 = token.parse().map_err(|_| {
                Error::Format(format!("line {}: cannot parse `{token}` as a number", lineno + 1))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("no rows found".into()));
    }
    let width = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Format(format!(
                "row {} has {} entries, expected {}",
                i + 1,
                row.len(),
                width
            )));
        }
    }
    Mat::from_rows(&rows)
}

/// Accepts either a single line of entries or a single column of one entry
/// per line.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let m = parse_matrix(text)?;
    if m.n_rows() == 1 {
        Ok(m.row(0).to_vec())
    } else if m.n_cols() == 1 {
        Ok(m.as_slice().to_vec())
    } else {
        Err(Error::Format(format!(
            "expected a vector, found a {}x{} matrix",
            m.n_rows(),
            m.n_cols()
        )))
    }
}

pub fn format_matrix(m: &Mat) -> String {
    let mut out = String::new();
    for i in 0..m.n_rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for (j, x) in v.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    Ok(std::fs::write(path, format_matrix(m))?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    Ok(std::fs::write(path, format_vector(v))?)
}
