use crate::data::{LabeledDataset, SparseRow};
use crate::error::{contract, Result};
use crate::oracle::FiniteSumProblem;

/// Bound on |d^2/dz^2 (y - sigmoid(z))^2| for y in [0, 1]. The true
/// supremum is about 0.154; 1 is used as a round, safe figure.
const RESIDUAL_CURVATURE_BOUND: f64 = 1.0;

/// Non-linear least squares with a sigmoid link:
/// f_i(x) = (y_i - h_i)^2, h_i = 1 / (1 + exp(-A_i . x)).
#[derive(Clone, Debug)]
pub struct SigmoidLeastSquares {
    dim: usize,
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    smoothness: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SigmoidLeastSquares {
    pub fn new(rows: Vec<SparseRow>, targets: Vec<f64>, dim: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(contract("sigmoid least squares needs at least one row"));
        }
        if rows.len() != targets.len() {
            return Err(contract("one target per row required"));
        }
        if dim == 0 {
            return Err(contract("dimension must be positive"));
        }
        if let Some(bad) = targets.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(contract(format!("target {bad} outside [0, 1]")));
        }
        for row in &rows {
            if row.indices().iter().any(|&j| j >= dim) {
                return Err(contract("row index exceeds dimension"));
            }
        }
        let max_row_sq = rows.iter().map(|r| r.norm_sq()).fold(0.0, f64::max);
        Ok(SigmoidLeastSquares {
            dim,
            rows,
            targets,
            smoothness: RESIDUAL_CURVATURE_BOUND * max_row_sq,
        })
    }

    pub fn from_dense(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(contract("dense rows must share one length"));
        }
        let sparse = rows.iter().map(|r| SparseRow::from_dense(r)).collect();
        Self::new(sparse, targets, dim)
    }

    /// Uses the dataset's 0/1 targets (labels -1 mapped to 0).
    pub fn from_dataset(data: &LabeledDataset) -> Result<Self> {
        Self::new(data.rows().to_vec(), data.targets(), data.dim())
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn prediction(&self, i: usize, x: &[f64]) -> f64 {
        sigmoid(self.rows[i].dot(x))
    }
}

impl FiniteSumProblem for SigmoidLeastSquares {
    fn n(&self) -> usize {
        self.rows.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> Option<f64> {
        (self.smoothness > 0.0).then_some(self.smoothness)
    }

    fn component_loss(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.targets[i] - self.prediction(i, x);
        r * r
    }

    fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let h = self.prediction(i, x);
        let coef = 2.0 * (h - self.targets[i]) * h * (1.0 - h);
        out.iter_mut().for_each(|o| *o = 0.0);
        let row = &self.rows[i];
        for (&j, &a) in row.indices().iter().zip(row.values()) {
            out[j] = coef * a;
        }
    }

    fn name(&self) -> &str {
        "sigmoid-lsq"
    }
}
