//! Row-major data matrix with optional integer class labels.
//!
//! [`DataMatrix`] is the container every other module works on: rows are
//! samples, columns are features. Values are validated to be finite at
//! construction so downstream numerics never have to re-check. Labels, when
//! present, are one `i64` per row.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    labels: Option<Vec<i64>>,
}

impl DataMatrix {
    /// Wraps an owned array, checking that every entry is finite and that
    /// `labels`, if given, has one entry per row.
    pub fn new(values: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::degenerate(format!(
                "matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some((r, c)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(idx, _)| idx)
        {
            return Err(Error::degenerate(format!(
                "non-finite value at row {r}, column {c}"
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != values.nrows() {
                return Err(Error::contract(format!(
                    "label count {} does not match row count {}",
                    l.len(),
                    values.nrows()
                )));
            }
        }
        // Standard (row-major, contiguous) layout is relied on by the hot
        // paths that iterate rows as slices.
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(DataMatrix { values, labels })
    }

    /// Builds a matrix from row vectors, all of which must share one length.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<i64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::degenerate("no rows given"));
        }
        let d = rows[0].len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::contract(format!(
                "row {i} has {} columns, expected {d}",
                rows[i].len()
            )));
        }
        let n = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((n, d), flat)
            .expect("shape checked above");
        DataMatrix::new(values, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Row `i` as a contiguous slice.
    pub fn row_slice(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.as_slice()[i * d..(i + 1) * d]
    }

    /// The whole matrix as one contiguous row-major slice.
    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("DataMatrix is always standard layout")
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// Same values with labels replaced.
    pub fn with_labels(&self, labels: Option<Vec<i64>>) -> Result<Self> {
        DataMatrix::new(self.values.clone(), labels)
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}
