//! Plain-text matrix files: one matrix row per line, comma separated, no
//! header, 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Result, SssaError};

/// Formats a float with 17 significant digits; `NaN` and infinities are
/// written as `NaN`, `inf`, `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn matrix_to_csv(m: &ArrayView2<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str, origin: &Path) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| SssaError::Parse {
                path: origin.to_path_buf(),
                msg: format!("line {}: bad number {field:?}", lineno + 1),
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(SssaError::Parse {
                    path: origin.to_path_buf(),
                    msg: format!("line {}: expected {c} fields, found {width}", lineno + 1),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| SssaError::Parse {
        path: origin.to_path_buf(),
        msg: "empty matrix file".into(),
    })?;
    Ok(Array2::from_shape_vec((rows, cols), data).expect("row lengths checked"))
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| SssaError::io(path, e))?;
    parse_matrix_csv(&text, path)
}

pub fn write_matrix(path: &Path, m: &ArrayView2<f64>) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| SssaError::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| SssaError::io(path, e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SssaError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let _ = writeln!(text);
    write_text(path, &text)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| SssaError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SssaError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}
