//! Matrix CSV files.
//!
//! The exchange format for data matrices is deliberately minimal so other
//! tools (and test oracles in other languages) can produce and consume it:
//!
//! ```text
//! f0,f1,...,f{d-1}[,label]
//! <one row per sample>
//! ```
//!
//! Features are written as `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` bit-for-bit. The optional trailing
//! `label` column holds integers. UTF-8, LF line endings, no quoting:
//! nothing in the format needs it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Formats a real for any of this crate's files: 17 significant digits,
/// exponent notation, round-trippable through [`str::parse`].
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders `m` in matrix CSV form (the trailing newline included).
pub fn matrix_to_csv(m: &DataMatrix) -> String {
    let d = m.n_cols();
    let mut out = String::new();
    for c in 0..d {
        if c > 0 {
            out.push(',');
        }
        let _ = write!(out, "f{c}");
    }
    if m.labels().is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..m.n_rows() {
        for (c, v) in m.row_slice(i).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        if let Some(labels) = m.labels() {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DataMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_matrix_csv(&text, &path.display().to_string())
}

/// Parses matrix CSV text; `source` names the origin in errors.
pub fn parse_matrix_csv(text: &str, source: &str) -> Result<DataMatrix> {
    let fail = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file".to_string()))?;

    let cols: Vec<&str> = header.split(',').collect();
    let labeled = cols.last() == Some(&"label");
    let d = if labeled { cols.len() - 1 } else { cols.len() };
    if d == 0 {
        return Err(fail(1, "no feature columns in header".to_string()));
    }
    for (c, name) in cols.iter().take(d).enumerate() {
        if *name != format!("f{c}") {
            return Err(fail(
                1,
                format!("expected header column 'f{c}', found '{name}'"),
            ));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        if raw.is_empty() {
            continue; // tolerate a trailing blank line
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != cols.len() {
            return Err(fail(
                lineno,
                format!("expected {} fields, found {}", cols.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(d);
        for (c, field) in fields.iter().take(d).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(lineno, format!("column f{c}: invalid real '{field}'")))?;
            if !v.is_finite() {
                return Err(fail(lineno, format!("column f{c}: non-finite value '{field}'")));
            }
            row.push(v);
        }
        if labeled {
            let field = fields[d];
            labels.push(
                field
                    .parse()
                    .map_err(|_| fail(lineno, format!("invalid label '{field}'")))?,
            );
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail(1, "file has a header but no data rows".to_string()));
    }
    DataMatrix::from_rows(rows, labeled.then_some(labels))
}
