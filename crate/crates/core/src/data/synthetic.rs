use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LabeledDataset, SparseRow};
use crate::error::{contract, Result};
use crate::problems::{sigmoid, QuadraticProblem, SigmoidLeastSquares};

/// Random strongly convex quadratics with curvatures in [mu, L].
///
/// Component 0 gets curvature L and component 1 gets mu, so the declared
/// constants are attained exactly; the rest are uniform in [mu, L].
/// Anchors are standard normal. With n = 1 the range must be a single
/// point (mu = L).
pub fn make_quadratic_suite(n: usize, dim: usize, smoothness: f64, mu: f64, seed: u64) -> Result<QuadraticProblem> {
    if n == 0 || dim == 0 {
        return Err(contract("quadratic suite needs n >= 1 and d >= 1"));
    }
    if !(mu > 0.0 && mu <= smoothness && smoothness.is_finite()) {
        return Err(contract(format!("need 0 < mu <= L, got mu = {mu}, L = {smoothness}")));
    }
    if n == 1 && mu != smoothness {
        return Err(contract("a single component cannot attain both mu and L"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curvatures: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => smoothness,
            1 => mu,
            _ => rng.random_range(mu..=smoothness),
        })
        .collect();
    let anchors = (0..n).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect();
    QuadraticProblem::with_curvatures(anchors, curvatures)
}

/// Dense Gaussian design (entries N(0, 1/d)) with targets drawn as
/// Bernoulli(sigmoid(A_i . x_true)) for a standard normal x_true.
pub fn make_sigmoid_problem(n: usize, dim: usize, seed: u64) -> Result<SigmoidLeastSquares> {
    if n == 0 || dim == 0 {
        return Err(contract("sigmoid problem needs n >= 1 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_true: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let scale = 1.0 / (dim as f64).sqrt();
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let p = sigmoid(row.iter().zip(&x_true).map(|(a, x)| a * x).sum());
        targets.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        rows.push(row);
    }
    SigmoidLeastSquares::from_dense(rows, targets)
}

/// Sparse binary features with +-1 labels from a planted logistic model,
/// shaped like the adult (a9a) benchmark: `dim` features, each active
/// with probability `density`.
pub fn make_binary_classification(n: usize, dim: usize, density: f64, seed: u64) -> Result<LabeledDataset> {
    if n == 0 || dim == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(contract("binary classification needs n, d >= 1 and density in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let bias = -density * weights.iter().sum::<f64>();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let indices: Vec<usize> = (0..dim).filter(|_| rng.random::<f64>() < density).collect();
        let z: f64 = bias + indices.iter().map(|&j| weights[j]).sum::<f64>();
        labels.push(if rng.random::<f64>() < sigmoid(z) { 1.0 } else { -1.0 });
        let values = vec![1.0; indices.len()];
        rows.push(SparseRow::new(indices, values)?);
    }
    Ok(LabeledDataset::new(rows, labels)?.with_dim(dim))
}
