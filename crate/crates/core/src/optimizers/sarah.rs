//! Classic SARAH over shuffled epochs: the recursive estimator restarts
//! from an exact full gradient at every epoch.

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::Result;
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct Sarah {
    x: ParamVector,
    x_prev: ParamVector,
    v: ParamVector,
    epoch: usize,
}

impl Sarah {
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.dim();
        Sarah { x_prev: x0.clone(), x: x0, v: ParamVector::zeros(d), epoch: 0 }
    }

    pub fn recursive_estimate(&self) -> &ParamVector {
        &self.v
    }
}

impl Optimizer for Sarah {
    fn method(&self) -> Method {
        Method::Sarah
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
        oracle.full_gradient_into(&self.x, &mut self.v)?;
        observer.on_step(&StepEvent {
            epoch: self.epoch,
            step: 0,
            index: None,
            point: &self.x,
            gradient: None,
            anchor_gradient: None,
            direction: &self.v,
        });
        self.x_prev.clone_from(&self.x);
        descend(&mut self.x, gamma, &self.v, self.epoch, 0)?;

        let mut g_cur = vec![0.0; d];
        let mut g_prev = vec![0.0; d];
        for (k, &i) in perm.as_slice().iter().enumerate() {
            let t = k + 1;
            oracle.component_gradient_into(i, &self.x, &mut g_cur)?;
            oracle.component_gradient_into(i, &self.x_prev, &mut g_prev)?;
            for ((v, gc), gp) in self.v.iter_mut().zip(&g_cur).zip(&g_prev) {
                *v += gc - gp;
            }
            observer.on_step(&StepEvent {
                epoch: self.epoch,
                step: t,
                index: Some(i),
                point: &self.x,
                gradient: Some(&g_cur),
                anchor_gradient: Some(&g_prev),
                direction: &self.v,
            });
            self.x_prev.clone_from(&self.x);
            descend(&mut self.x, gamma, &self.v, self.epoch, t)?;
        }
        check_bounded(&self.x, gamma, self.epoch, perm.len())?;
        self.epoch += 1;
        Ok(())
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn epochs_done(&self) -> usize {
        self.epoch
    }

    fn memory(&self) -> MemoryFootprint {
        MemoryFootprint { persistent_vectors: 3, scratch_vectors: 2, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}
