use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Size of the tuning grid {2^k * gamma_theory : k = 0..12}.
pub const GRID_POINTS: usize = 13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepsizePolicy {
    /// gamma = 1 / (20 L n)
    TheoreticalNfgSvrg,
    /// gamma = 1 / (20 L (n + 1))
    TheoreticalNfgSarah,
    Fixed(f64),
    Grid(Vec<f64>),
}

impl StepsizePolicy {
    /// Every stepsize the policy asks to try.
    pub fn candidates(&self, smoothness: f64, n: usize) -> Result<Vec<f64>> {
        match self {
            StepsizePolicy::Grid(values) => {
                if values.is_empty() {
                    return Err(contract("empty stepsize grid"));
                }
                values.iter().map(|&g| check_positive(g)).collect()
            }
            single => Ok(vec![theoretical_stepsize(single, smoothness, n)?]),
        }
    }
}

fn check_positive(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(gamma)
    } else {
        Err(contract(format!("stepsize must be positive and finite, got {gamma}")))
    }
}

/// Resolves a single-valued policy. Grids have no single value and are
/// rejected; use [`StepsizePolicy::candidates`] for them.
pub fn theoretical_stepsize(policy: &StepsizePolicy, smoothness: f64, n: usize) -> Result<f64> {
    let needs_constants = matches!(policy, StepsizePolicy::TheoreticalNfgSvrg | StepsizePolicy::TheoreticalNfgSarah);
    if needs_constants {
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(contract(format!("smoothness constant must be positive, got {smoothness}")));
        }
        if n == 0 {
            return Err(contract("n must be at least 1"));
        }
    }
    match policy {
        StepsizePolicy::TheoreticalNfgSvrg => Ok(1.0 / (20.0 * smoothness * n as f64)),
        StepsizePolicy::TheoreticalNfgSarah => Ok(1.0 / (20.0 * smoothness * (n as f64 + 1.0))),
        StepsizePolicy::Fixed(gamma) => check_positive(*gamma),
        StepsizePolicy::Grid(_) => Err(contract("a grid policy has no single stepsize")),
    }
}

/// {2^k * base : k = 0..points}.
pub fn log_grid(base: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| base * 2f64.powi(k as i32)).collect()
}
