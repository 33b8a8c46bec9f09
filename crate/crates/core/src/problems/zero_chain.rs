//! The zero-chain hard instance for first-order finite-sum methods.
//!
//! The chain function on R^d is
//!
//! ```text
//! l(z) = -Psi(1) Phi(z_1) + sum_{j=2..d} [ Psi(-z_{j-1}) Phi(-z_j) - Psi(z_{j-1}) Phi(z_j) ]
//! ```
//!
//! and is split into links l_1, ..., l_d (the summands above). Component
//! i of the finite sum owns every link j with j = i (mod n):
//! f_i(x) = (L C^2 / L_0) sum_j l_j(x / C). A gradient evaluation can
//! switch on at most one new coordinate, which is what makes the instance
//! hard for any method that only touches components one at a time.
//!
//! Link and coordinate numbering is 1-based here to match `prog`; the
//! component index is the usual 0-based one, so link j belongs to
//! component (j - 1) mod n.

use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use crate::error::{contract, Result};
use crate::oracle::FiniteSumProblem;
use crate::vector::ParamVector;

/// Smoothness constant L_0 of every link.
pub const LINK_SMOOTHNESS: f64 = 152.0;
/// Bound G_0 on ||grad l||_inf.
pub const CHAIN_GRADIENT_BOUND: f64 = 23.0;

/// Psi(z) = 0 for z <= 1/2, exp(1 - 1/(2z - 1)^2) otherwise.
pub fn psi(z: f64) -> f64 {
    if z <= 0.5 {
        0.0
    } else {
        let s = 2.0 * z - 1.0;
        (1.0 - 1.0 / (s * s)).exp()
    }
}

pub fn psi_derivative(z: f64) -> f64 {
    let value = psi(z);
    if value == 0.0 {
        return 0.0;
    }
    let s = 2.0 * z - 1.0;
    value * 4.0 / (s * s * s)
}

/// Phi(z) = sqrt(e) * int_{-inf}^{z} exp(-t^2 / 2) dt, via erfc.
pub fn phi(z: f64) -> f64 {
    E.sqrt() * (PI / 2.0).sqrt() * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn phi_derivative(z: f64) -> f64 {
    E.sqrt() * (-0.5 * z * z).exp()
}

/// Largest 1-based index of a nonzero coordinate; 0 for the zero vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProgressMeasure(pub usize);

/// Exact zero comparison: the structure of the instance produces exact zeros.
pub fn prog(x: &[f64]) -> ProgressMeasure {
    ProgressMeasure(x.iter().rposition(|&v| v != 0.0).map_or(0, |j| j + 1))
}

/// Value of link j (1-based) at z.
pub fn link_value(j: usize, z: &[f64]) -> f64 {
    if j == 1 {
        -psi(1.0) * phi(z[0])
    } else {
        let prev = z[j - 2];
        let cur = z[j - 1];
        psi(-prev) * phi(-cur) - psi(prev) * phi(cur)
    }
}

/// out += coef * grad l_j(z).
pub fn add_link_gradient(j: usize, z: &[f64], coef: f64, out: &mut [f64]) {
    if j == 1 {
        out[0] += coef * (-psi(1.0) * phi_derivative(z[0]));
    } else {
        let prev = z[j - 2];
        let cur = z[j - 1];
        out[j - 2] += coef * (-psi_derivative(-prev) * phi(-cur) - psi_derivative(prev) * phi(cur));
        out[j - 1] += coef * (-psi(-prev) * phi_derivative(-cur) - psi(prev) * phi_derivative(cur));
    }
}

/// l(z) summed over every link.
pub fn chain_value(z: &[f64]) -> f64 {
    (1..=z.len()).map(|j| link_value(j, z)).sum()
}

pub fn chain_gradient(z: &[f64]) -> ParamVector {
    let mut g = ParamVector::zeros(z.len());
    for j in 1..=z.len() {
        add_link_gradient(j, z, 1.0, &mut g);
    }
    g
}

#[derive(Clone, Debug)]
pub struct ZeroChainProblem {
    dim: usize,
    n: usize,
    smoothness: f64,
    scale: f64,
}

impl ZeroChainProblem {
    pub fn new(dim: usize, n: usize, smoothness: f64, scale: f64) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(contract("zero-chain instance needs d >= 1 and n >= 1"));
        }
        if !(smoothness > 0.0 && smoothness.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(contract("zero-chain L and C must be positive and finite"));
        }
        Ok(ZeroChainProblem { dim, n, smoothness, scale })
    }

    /// C = 1 and L = L_0, so each f_i is a plain sum of links.
    pub fn standard(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, LINK_SMOOTHNESS, 1.0)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Component owning link j (1-based).
    pub fn owner(&self, link: usize) -> usize {
        (link - 1) % self.n
    }

    /// Links owned by component i, ascending.
    pub fn links(&self, i: usize) -> impl Iterator<Item = usize> {
        (i + 1..=self.dim).step_by(self.n)
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v / self.scale).collect()
    }
}

impl FiniteSumProblem for ZeroChainProblem {
    fn n(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn component_loss(&self, i: usize, x: &[f64]) -> f64 {
        let z = self.scaled(x);
        let coef = self.smoothness * self.scale * self.scale / LINK_SMOOTHNESS;
        coef * self.links(i).map(|j| link_value(j, &z)).sum::<f64>()
    }

    fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let z = self.scaled(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        let coef = self.smoothness * self.scale / LINK_SMOOTHNESS;
        for j in self.links(i) {
            add_link_gradient(j, &z, coef, out);
        }
    }

    fn name(&self) -> &str {
        "zero-chain"
    }
}
