use crate::error::{contract, Result};
use crate::oracle::FiniteSumProblem;
use crate::vector::{self, ParamVector};

/// f_i(x) = (c_i / 2) ||x - a_i||^2.
///
/// Every component is c_i-smooth and c_i-strongly convex, so the declared
/// constants are L = max c_i and mu = min c_i.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    dim: usize,
    anchors: Vec<f64>,
    curvatures: Vec<f64>,
}

impl QuadraticProblem {
    /// All components share the curvature `scale`.
    pub fn with_scale(anchors: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        let n = anchors.len();
        Self::with_curvatures(anchors, vec![scale; n])
    }

    pub fn with_curvatures(anchors: Vec<Vec<f64>>, curvatures: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(contract("quadratic problem needs at least one component"));
        }
        if anchors.len() != curvatures.len() {
            return Err(contract("one curvature per anchor required"));
        }
        let dim = anchors[0].len();
        if dim == 0 {
            return Err(contract("dimension must be positive"));
        }
        if anchors.iter().any(|a| a.len() != dim) {
            return Err(contract("anchors must share one dimension"));
        }
        if anchors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(contract("anchors must be finite"));
        }
        if curvatures.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(contract("curvatures must be positive and finite"));
        }
        Ok(QuadraticProblem { dim, anchors: anchors.concat(), curvatures })
    }

    pub fn anchor(&self, i: usize) -> &[f64] {
        &self.anchors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvatures
    }

    /// x* = sum c_i a_i / sum c_i.
    pub fn minimizer(&self) -> ParamVector {
        let mut x = ParamVector::zeros(self.dim);
        let total: f64 = self.curvatures.iter().sum();
        for (i, &c) in self.curvatures.iter().enumerate() {
            vector::axpy(c / total, self.anchor(i), &mut x);
        }
        x
    }
}

impl FiniteSumProblem for QuadraticProblem {
    fn n(&self) -> usize {
        self.curvatures.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> Option<f64> {
        self.curvatures.iter().cloned().reduce(f64::max)
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.curvatures.iter().cloned().reduce(f64::min)
    }

    fn optimal_value(&self) -> Option<f64> {
        let x = self.minimizer();
        let total: f64 = (0..self.n()).map(|i| self.component_loss(i, &x)).sum();
        Some(total / self.n() as f64)
    }

    fn component_loss(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * self.curvatures[i] * vector::dist_sq(x, self.anchor(i))
    }

    fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let c = self.curvatures[i];
        for ((o, xi), ai) in out.iter_mut().zip(x).zip(self.anchor(i)) {
            *o = c * (xi - ai);
        }
    }

    fn name(&self) -> &str {
        "quadratic"
    }
}
