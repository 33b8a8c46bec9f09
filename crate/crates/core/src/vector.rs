//! Dense parameter vectors and the handful of BLAS-1 style kernels the
//! optimizers need. Everything operates on slices so that scratch buffers
//! and owned vectors share one code path.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

/// A dense point (or gradient-shaped value) in R^d.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn from_vec(entries: Vec<f64>) -> Self {
        ParamVector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn set_zero(&mut self) {
        self.0.iter_mut().for_each(|v| *v = 0.0);
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Squared distance ||a - b||^2.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Relative difference ||a - b|| / max(||a||, ||b||), or the absolute
/// difference when both vectors are zero.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let diff = dist_sq(a, b).sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axpy_and_norms() {
        let x = [1.0, -2.0, 2.0];
        let mut y = [0.5, 0.5, 0.5];
        axpy(2.0, &x, &mut y);
        assert_eq!(y, [2.5, -3.5, 4.5]);
        assert_eq!(norm_sq(&x), 9.0);
        assert_eq!(norm(&x), 3.0);
        assert_eq!(max_abs(&x), 2.0);
        assert_eq!(dot(&x, &x), 9.0);
    }

    #[test]
    fn rel_diff_handles_zero() {
        assert_eq!(rel_diff(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((rel_diff(&[1.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
