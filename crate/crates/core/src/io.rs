//! Headerless CSV for vectors (one value per line) and matrices (row-major,
//! one row per line). Values are written with 17 significant digits so a
//! round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn vector_to_csv(v: &Vector) -> String {
    let mut out = String::with_capacity(v.len() * 24);
    for x in v.iter() {
        out.push_str(&format_f64(*x));
        out.push('\n');
    }
    out
}

pub fn matrix_to_csv(a: &Matrix) -> String {
    let mut out = String::with_capacity(a.len() * 24);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(a[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn parse_rows(text: &str, origin: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    message: format!("record {}: `{f}`: {e}", line + 1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a vector. A single row of comma-separated values is also accepted.
pub fn vector_from_csv(text: &str, origin: &Path) -> Result<Vector> {
    let rows = parse_rows(text, origin)?;
    let values: Vec<f64> = if rows.len() == 1 {
        rows.into_iter().next().unwrap_or_default()
    } else {
        let mut values = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != 1 {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    message: format!("vector line {} has {} fields, expected 1", i + 1, row.len()),
                });
            }
            values.push(row[0]);
        }
        values
    };
    Ok(Vector::from_vec(values))
}

pub fn matrix_from_csv(text: &str, origin: &Path) -> Result<Matrix> {
    let rows = parse_rows(text, origin)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            message: format!(
                "matrix row {} has {} fields, expected {ncols}",
                i + 1,
                row.len()
            ),
        });
    }
    let nrows = rows.len();
    Ok(Matrix::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    vector_from_csv(&text, path)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    matrix_from_csv(&text, path)
}

pub fn write_vector(path: &Path, v: &Vector) -> Result<()> {
    fs::write(path, vector_to_csv(v))?;
    Ok(())
}

pub fn write_matrix(path: &Path, a: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_csv(a))?;
    Ok(())
}

/// Renders `key=value` lines in the given order.
pub fn key_values<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{}={}", k.as_ref(), v.as_ref());
    }
    out
}
