//! SVRG without full gradients.
//!
//! The full gradient at the reference point is replaced by the average of
//! the stochastic gradients seen during the previous epoch, maintained as
//! a running mean so memory stays at a few d-vectors. One epoch over a
//! permutation pi:
//!
//! ```text
//! for t = 0..n-1:
//!     g          = grad f_{pi_t}(x_t)
//!     v_tilde    = t/(t+1) * v_tilde + 1/(t+1) * g
//!     direction  = g - grad f_{pi_t}(omega) + v
//!     x_{t+1}    = x_t - gamma * direction
//! omega <- x_n;  v <- v_tilde;  v_tilde <- 0
//! ```
//!
//! The reference point omega is the last iterate of the previous epoch.
//! The run starts from omega = x_0 and v = 0, so the first epoch only
//! moves the iterate once its stochastic gradients disagree with those at
//! omega; its main effect is to populate v_tilde.

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::Result;
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct NfgSvrg {
    x: ParamVector,
    omega: ParamVector,
    v: ParamVector,
    v_tilde: ParamVector,
    epoch: usize,
    inner_t: usize,
}

impl NfgSvrg {
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.dim();
        Self::with_estimate(x0, ParamVector::zeros(d))
    }

    /// Starts with a caller-supplied gradient estimate instead of 0.
    pub fn with_estimate(x0: ParamVector, v0: ParamVector) -> Self {
        assert_eq!(x0.dim(), v0.dim(), "estimate must match the iterate's dimension");
        let d = x0.dim();
        NfgSvrg { omega: x0.clone(), x: x0, v: v0, v_tilde: ParamVector::zeros(d), epoch: 0, inner_t: 0 }
    }

    pub fn omega(&self) -> &ParamVector {
        &self.omega
    }

    /// Estimate of grad f(omega) used during the next epoch.
    pub fn estimate(&self) -> &ParamVector {
        &self.v
    }

    pub fn running_average(&self) -> &ParamVector {
        &self.v_tilde
    }

    pub fn inner_step(&self) -> usize {
        self.inner_t
    }
}

impl Optimizer for NfgSvrg {
    fn method(&self) -> Method {
        Method::NfgSvrg
    }

    fn run_epoch(
        &mut self,
        oracle: &mut DynOracle<'_>,
        perm: &Permutation,
        gamma: f64,
        observer: &mut dyn StepObserver,
    ) -> Result<()> {
        check_epoch_args(oracle, perm, gamma, &self.x)?;
        let d = self.x.dim();
        let mut g_x = vec![0.0; d];
        let mut g_omega = vec![0.0; d];
        let mut direction = vec![0.0; d];

        for (t, &i) in perm.as_slice().iter().enumerate() {
            self.inner_t = t;
            oracle.component_gradient_into(i, &self.x, &mut g_x)?;
            let keep = t as f64 / (t + 1) as f64;
            let add = 1.0 / (t + 1) as f64;
            for (vt, g) in self.v_tilde.iter_mut().zip(&g_x) {
                *vt = keep * *vt + add * g;
            }
            oracle.component_gradient_into(i, &self.omega, &mut g_omega)?;
            for (((dir, gx), gw), v) in direction.iter_mut().zip(&g_x).zip(&g_omega).zip(self.v.iter()) {
                *dir = gx - gw + v;
            }
            observer.on_step(&StepEvent {
                epoch: self.epoch,
                step: t,
                index: Some(i),
                point: &self.x,
                gradient: Some(&g_x),
                anchor_gradient: Some(&g_omega),
                direction: &direction,
            });
            descend(&mut self.x, gamma, &direction, self.epoch, t)?;
        }
        check_bounded(&self.x, gamma, self.epoch, perm.len())?;

        self.omega.clone_from(&self.x);
        std::mem::swap(&mut self.v, &mut self.v_tilde);
        self.v_tilde.set_zero();
        self.epoch += 1;
        self.inner_t = 0;
        Ok(())
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn epochs_done(&self) -> usize {
        self.epoch
    }

    fn memory(&self) -> MemoryFootprint {
        MemoryFootprint { persistent_vectors: 4, scratch_vectors: 3, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::NoObserver;
    use crate::problems::QuadraticProblem;

    #[test]
    fn cold_start_single_component_trace() {
        // f(x) = x^2 / 2, x0 = omega0 = 1, v0 = 0, gamma = 1/(20 * 1 * 1)
        let p = QuadraticProblem::with_scale(vec![vec![0.0]], 1.0).unwrap();
        let mut oracle = DynOracle::erased(&p);
        let mut opt = NfgSvrg::new(ParamVector::from_vec(vec![1.0]));
        opt.run_epoch(&mut oracle, &Permutation::identity(1), 0.05, &mut NoObserver).unwrap();
        assert_eq!(opt.iterate(), &[1.0]);
        assert_eq!(opt.estimate().as_slice(), &[1.0]);
        assert_eq!(opt.omega().as_slice(), &[1.0]);
        assert_eq!(opt.running_average().as_slice(), &[0.0]);
        assert_eq!(oracle.component_units(), 2);

        // second epoch moves along v: direction = 1 - 1 + 1
        opt.run_epoch(&mut oracle, &Permutation::identity(1), 0.05, &mut NoObserver).unwrap();
        assert_eq!(opt.iterate(), &[0.95]);
        assert_eq!(opt.estimate().as_slice(), &[1.0]);
        assert_eq!(opt.epochs_done(), 2);
    }

    #[test]
    fn rejects_wrong_permutation_length() {
        let p = QuadraticProblem::with_scale(vec![vec![0.0], vec![1.0]], 1.0).unwrap();
        let mut oracle = DynOracle::erased(&p);
        let mut opt = NfgSvrg::new(ParamVector::zeros(1));
        assert!(opt.run_epoch(&mut oracle, &Permutation::identity(3), 0.1, &mut NoObserver).is_err());
        assert!(opt.run_epoch(&mut oracle, &Permutation::identity(2), 0.0, &mut NoObserver).is_err());
    }
}
