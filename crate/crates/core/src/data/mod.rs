//! Datasets: sparse rows, LIBSVM text ingestion and synthetic instances.

mod libsvm;
mod synthetic;

pub use libsvm::{load_libsvm, parse_libsvm, parse_libsvm_bytes, write_libsvm};
pub use synthetic::{make_binary_classification, make_quadratic_suite, make_sigmoid_problem};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// A sparse feature vector with 0-based, strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(contract("indices and values differ in length"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(contract("sparse indices must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract("sparse values must be finite"));
        }
        Ok(SparseRow { indices, values })
    }

    /// Keeps the nonzero entries of a dense row.
    pub fn from_dense(row: &[f64]) -> Self {
        let (indices, values) = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).unzip();
        SparseRow { indices, values }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&j, &v)| v * x[j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// One past the largest index, i.e. the smallest dimension holding this row.
    pub fn span(&self) -> usize {
        self.indices.last().map_or(0, |&j| j + 1)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }
}

/// Labeled sparse rows. `dim` is the largest (1-based) feature index seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(rows: Vec<SparseRow>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(contract("dataset needs at least one row"));
        }
        if rows.len() != labels.len() {
            return Err(contract("one label per row required"));
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(contract("labels must be finite"));
        }
        let dim = rows.iter().map(SparseRow::span).max().unwrap_or(0);
        Ok(LabeledDataset { rows, labels, dim })
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Widens the feature space; never shrinks it.
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = self.dim.max(dim);
        self
    }

    /// Targets for the sigmoid least-squares objective: label -1 becomes 0,
    /// everything else (in particular 0 and 1) is kept as is.
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| if y == -1.0 { 0.0 } else { y }).collect()
    }

    /// The first `rows` rows (or all of them if there are fewer).
    pub fn head(&self, rows: usize) -> Result<Self> {
        let k = rows.min(self.len());
        LabeledDataset::new(self.rows[..k].to_vec(), self.labels[..k].to_vec()).map(|d| d.with_dim(self.dim))
    }

    /// Divides every feature by its largest absolute value.
    pub fn scaled_max_abs(&self) -> Self {
        let mut scale = vec![0.0f64; self.dim];
        for row in &self.rows {
            for (&j, &v) in row.indices.iter().zip(&row.values) {
                scale[j] = scale[j].max(v.abs());
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|row| SparseRow {
                indices: row.indices.clone(),
                values: row.indices.iter().zip(&row.values).map(|(&j, &v)| v / scale[j]).collect(),
            })
            .collect();
        LabeledDataset { rows, labels: self.labels.clone(), dim: self.dim }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_row_validation() {
        assert!(SparseRow::new(vec![0, 2], vec![1.0, 2.0]).is_ok());
        assert!(SparseRow::new(vec![2, 2], vec![1.0, 2.0]).is_err());
        assert!(SparseRow::new(vec![0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn targets_map_minus_one_only() {
        let rows = vec![SparseRow::default(); 4];
        let d = LabeledDataset::new(rows, vec![-1.0, 1.0, 0.0, 0.25]).unwrap();
        assert_eq!(d.targets(), vec![0.0, 1.0, 0.0, 0.25]);
    }

    #[test]
    fn max_abs_scaling() {
        let rows = vec![
            SparseRow::new(vec![0, 1], vec![2.0, -4.0]).unwrap(),
            SparseRow::new(vec![1], vec![1.0]).unwrap(),
        ];
        let d = LabeledDataset::new(rows, vec![1.0, -1.0]).unwrap().scaled_max_abs();
        assert_eq!(d.rows()[0].values(), &[1.0, -1.0]);
        assert_eq!(d.rows()[1].values(), &[0.25]);
    }

    #[test]
    fn head_keeps_dimension() {
        let rows = vec![
            SparseRow::new(vec![0], vec![1.0]).unwrap(),
            SparseRow::new(vec![5], vec![1.0]).unwrap(),
        ];
        let d = LabeledDataset::new(rows, vec![1.0, 1.0]).unwrap();
        let h = d.head(1).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.dim(), 6);
    }
}
