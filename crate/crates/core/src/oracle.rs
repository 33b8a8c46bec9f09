//! The finite-sum oracle contract and component-gradient accounting.
//!
//! Problems implement [`FiniteSumProblem`], which exposes raw, uncounted
//! evaluations. Optimizers never call those directly: they go through a
//! [`CountingOracle`], which validates arguments, rejects non-finite
//! results and keeps an [`OracleTally`]. Loss values and the telemetry
//! gradient norms are deliberately free; only gradient evaluations made
//! on behalf of an optimizer are counted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{self, ParamVector};

/// f(x) = (1/n) sum_i f_i(x) over x in R^d.
pub trait FiniteSumProblem: Send + Sync {
    /// Number of components.
    fn n(&self) -> usize;

    fn dim(&self) -> usize;

    /// Declared smoothness constant L of every component, if known.
    fn smoothness(&self) -> Option<f64>;

    /// Declared strong-convexity constant mu of every component, if known.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    /// Closed-form optimal value f*, if available.
    fn optimal_value(&self) -> Option<f64> {
        None
    }

    fn component_loss(&self, i: usize, x: &[f64]) -> f64;

    /// Overwrites `out` with the gradient of f_i at x.
    fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]);

    fn name(&self) -> &str;
}

/// Gradient-oracle call counter.
///
/// Full gradients are tracked separately so that they can be reported
/// either as passes or converted to component units (one full gradient
/// costs n component evaluations).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTally {
    pub component_grad_calls: u64,
    pub full_grad_calls: u64,
}

impl OracleTally {
    pub fn component_units(&self, n: usize) -> u64 {
        self.component_grad_calls + n as u64 * self.full_grad_calls
    }
}

/// A problem paired with the tally of one run.
pub struct CountingOracle<'p, P: ?Sized> {
    problem: &'p P,
    tally: OracleTally,
}

/// Type-erased oracle, the form optimizers consume.
pub type DynOracle<'p> = CountingOracle<'p, dyn FiniteSumProblem + 'p>;

impl<'p> DynOracle<'p> {
    pub fn erased<P: FiniteSumProblem + 'p>(problem: &'p P) -> Self {
        CountingOracle { problem, tally: OracleTally::default() }
    }
}

impl<'p, P: FiniteSumProblem + ?Sized> CountingOracle<'p, P> {
    pub fn new(problem: &'p P) -> Self {
        CountingOracle { problem, tally: OracleTally::default() }
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }

    pub fn tally(&self) -> OracleTally {
        self.tally
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn component_units(&self) -> u64 {
        self.tally.component_units(self.problem.n())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.problem.dim() {
            return Err(Error::DimensionMismatch { expected: self.problem.dim(), got: x.len() });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        let n = self.problem.n();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(())
    }

    /// Gradient of f_i at x written into `out`; counts one component call.
    pub fn component_gradient_into(&mut self, i: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_index(i)?;
        self.check_point(x)?;
        self.check_point(out)?;
        self.tally.component_grad_calls += 1;
        self.problem.component_gradient_into(i, x, out);
        if out.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { index: i, point: x.to_vec() });
        }
        Ok(())
    }

    /// Gradient of f_i at x as a fresh vector; counts one component call.
    pub fn component_gradient(&mut self, i: usize, x: &[f64]) -> Result<ParamVector> {
        let mut out = ParamVector::zeros(self.problem.dim());
        self.component_gradient_into(i, x, &mut out)?;
        Ok(out)
    }

    /// Exact mean of all component gradients, summed in ascending index
    /// order; counts one full-gradient call (n component units).
    pub fn full_gradient_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(x)?;
        self.check_point(out)?;
        self.tally.full_grad_calls += 1;
        sum_component_gradients(self.problem, x, out)
    }

    pub fn full_gradient(&mut self, x: &[f64]) -> Result<ParamVector> {
        let mut out = ParamVector::zeros(self.problem.dim());
        self.full_gradient_into(x, &mut out)?;
        Ok(out)
    }

    /// f(x). Not counted.
    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        objective(self.problem, x)
    }
}

fn sum_component_gradients<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let n = problem.n();
    let mut g = vec![0.0; problem.dim()];
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        problem.component_gradient_into(i, x, &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, point: x.to_vec() });
        }
        vector::axpy(1.0, &g, out);
    }
    let inv = 1.0 / n as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    Ok(())
}

/// f(x) = (1/n) sum_i f_i(x), summed in index order.
pub fn objective<P: FiniteSumProblem + ?Sized>(problem: &P, x: &[f64]) -> Result<f64> {
    let n = problem.n();
    let total: f64 = (0..n).map(|i| problem.component_loss(i, x)).sum();
    let f = total / n as f64;
    if !f.is_finite() {
        return Err(Error::NonFiniteLoss { point: x.to_vec() });
    }
    Ok(f)
}

/// Uncounted full gradient for telemetry (||grad f(omega_s)||^2 rows).
pub fn exact_gradient<P: FiniteSumProblem + ?Sized>(problem: &P, x: &[f64]) -> Result<ParamVector> {
    let mut out = ParamVector::zeros(problem.dim());
    sum_component_gradients(problem, x, &mut out)?;
    Ok(out)
}
