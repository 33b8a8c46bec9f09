//! SARAH without full gradients.
//!
//! Each epoch restarts the recursive estimator from the previous epoch's
//! gradient average, takes one extra step with it, then runs the SARAH
//! recursion with a SAG-style 1/n factor on the innovation:
//!
//! ```text
//! v^0 = v;  x^1 = x^0 - gamma v^0
//! for t = 1..n:
//!     g        = grad f_{pi_t}(x^t)
//!     v_tilde  = (t-1)/t * v_tilde + 1/t * g
//!     v^t      = (g - grad f_{pi_t}(x^{t-1})) / n + v^{t-1}
//!     x^{t+1}  = x^t - gamma v^t
//! x^0 <- x^{n+1};  v <- v_tilde;  v_tilde <- 0
//! ```
//!
//! That is n + 1 parameter updates per epoch but only 2n gradient
//! evaluations, since the restart step reuses v.

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::Result;
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct NfgSarah {
    x: ParamVector,
    x_prev: ParamVector,
    v_t: ParamVector,
    v: ParamVector,
    v_tilde: ParamVector,
    epoch: usize,
    inner_t: usize,
}

impl NfgSarah {
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.dim();
        Self::with_estimate(x0, ParamVector::zeros(d))
    }

    pub fn with_estimate(x0: ParamVector, v0: ParamVector) -> Self {
        assert_eq!(x0.dim(), v0.dim(), "estimate must match the iterate's dimension");
        let d = x0.dim();
        NfgSarah {
            x_prev: x0.clone(),
            x: x0,
            v_t: v0.clone(),
            v: v0,
            v_tilde: ParamVector::zeros(d),
            epoch: 0,
            inner_t: 0,
        }
    }

    /// Epoch-start estimate v_s (the restart direction of the next epoch).
    pub fn estimate(&self) -> &ParamVector {
        &self.v
    }

    /// Last recursive estimate v_s^t.
    pub fn recursive_estimate(&self) -> &ParamVector {
        &self.v_t
    }

    pub fn inner_step(&self) -> usize {
        self.inner_t
    }
}

impl Optimizer for NfgSarah {
    fn method(&self) -> Method {
        Method::NfgSarah
    }

    fn run_epoch(
        &mut self,
        oracle: &mut DynOracle<'_>,
        perm: &Permutation,
        gamma: f64,
        observer: &mut dyn StepObserver,
    ) -> Result<()> {
        check_epoch_args(oracle, perm, gamma, &self.x)?;
        let n = perm.len();
        let inv_n = 1.0 / n as f64;
        let d = self.x.dim();
        let mut g_cur = vec![0.0; d];
        let mut g_prev = vec![0.0; d];

        self.inner_t = 0;
        self.v_t.clone_from(&self.v);
        observer.on_step(&StepEvent {
            epoch: self.epoch,
            step: 0,
            index: None,
            point: &self.x,
            gradient: None,
            anchor_gradient: None,
            direction: &self.v_t,
        });
        self.x_prev.clone_from(&self.x);
        descend(&mut self.x, gamma, &self.v_t, self.epoch, 0)?;

        for (k, &i) in perm.as_slice().iter().enumerate() {
            let t = k + 1;
            self.inner_t = t;
            oracle.component_gradient_into(i, &self.x, &mut g_cur)?;
            let keep = (t - 1) as f64 / t as f64;
            let add = 1.0 / t as f64;
            for (vt, g) in self.v_tilde.iter_mut().zip(&g_cur) {
                *vt = keep * *vt + add * g;
            }
            oracle.component_gradient_into(i, &self.x_prev, &mut g_prev)?;
            for ((v, gc), gp) in self.v_t.iter_mut().zip(&g_cur).zip(&g_prev) {
                *v += inv_n * (gc - gp);
            }
            observer.on_step(&StepEvent {
                epoch: self.epoch,
                step: t,
                index: Some(i),
                point: &self.x,
                gradient: Some(&g_cur),
                anchor_gradient: Some(&g_prev),
                direction: &self.v_t,
            });
            self.x_prev.clone_from(&self.x);
            descend(&mut self.x, gamma, &self.v_t, self.epoch, t)?;
        }
        check_bounded(&self.x, gamma, self.epoch, n)?;

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
        MemoryFootprint { persistent_vectors: 5, scratch_vectors: 2, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}
