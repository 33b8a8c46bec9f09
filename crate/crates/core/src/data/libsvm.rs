//! LIBSVM sparse text format:
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ...   # optional comment
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. Blank lines
//! and `#` comments are ignored. Files starting with the gzip magic bytes
//! are decompressed transparently by [`load_libsvm`].

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{LabeledDataset, SparseRow};
use crate::error::{Error, ParseError, Result};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

pub fn parse_libsvm(text: &str) -> Result<LabeledDataset, ParseError> {
    parse_libsvm_bytes(text.as_bytes())
}

/// Parses raw bytes. Invalid UTF-8 is reported as a located error.
pub fn parse_libsvm_bytes(bytes: &[u8]) -> Result<LabeledDataset, ParseError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line_no = k + 1;
        let line = std::str::from_utf8(raw).map_err(|e| {
            let column = String::from_utf8_lossy(&raw[..e.valid_up_to()]).chars().count() + 1;
            ParseError::new(line_no, column, "invalid UTF-8")
        })?;
        if let Some((label, row)) = parse_line(line, line_no)? {
            labels.push(label);
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(ParseError::new(1, 1, "no rows"));
    }
    LabeledDataset::new(rows, labels).map_err(|e| ParseError::new(1, 1, e.to_string()))
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<(f64, SparseRow)>, ParseError> {
    let content = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = tokens_with_columns(content);
    let Some((label_col, label_tok)) = tokens.next() else {
        return Ok(None);
    };
    let err = |col: usize, msg: String| ParseError::new(line_no, col, msg);
    let label = parse_finite(label_tok).ok_or_else(|| err(label_col, format!("invalid label '{label_tok}'")))?;

    let mut indices = Vec::new();
    let mut values = Vec::new();
    for (col, tok) in tokens {
        let (idx_str, val_str) =
            tok.split_once(':').ok_or_else(|| err(col, format!("expected <index>:<value>, found '{tok}'")))?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| err(col, format!("invalid feature index '{idx_str}'")))?;
        if idx == 0 {
            return Err(err(col, "feature indices are 1-based; found 0".to_string()));
        }
        let value = parse_finite(val_str)
            .ok_or_else(|| err(col + idx_str.chars().count() + 1, format!("invalid feature value '{val_str}'")))?;
        let internal = idx - 1;
        if indices.last().is_some_and(|&prev| internal <= prev) {
            return Err(err(col, format!("feature index {idx} is not increasing")));
        }
        indices.push(internal);
        values.push(value);
    }
    let row = SparseRow::new(indices, values).map_err(|e| err(1, e.to_string()))?;
    Ok(Some((label, row)))
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Whitespace-separated tokens with their 1-based character column.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut column = 1;
    std::iter::from_fn(move || {
        let skipped = rest.len() - rest.trim_start().len();
        column += rest[..skipped].chars().count();
        rest = &rest[skipped..];
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let (tok, tail) = rest.split_at(end);
        let start = column;
        column += tok.chars().count();
        rest = tail;
        Some((start, tok))
    })
}

/// Serializes with shortest round-trip float formatting and 1-based indices.
pub fn write_libsvm(data: &LabeledDataset) -> String {
    let mut out = String::new();
    for (row, label) in data.rows().iter().zip(data.labels()) {
        write!(out, "{label}").unwrap();
        for (&j, &v) in row.indices().iter().zip(row.values()) {
            write!(out, " {}:{v}", j + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads a LIBSVM file, gunzipping it first when it carries the gzip magic.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let raw = std::fs::read(path).map_err(io_err)?;
    let bytes = if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io_err)?;
        out
    } else {
        raw
    };
    Ok(parse_libsvm_bytes(&bytes)?)
}
