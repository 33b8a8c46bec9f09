//! Plain shuffled SGD: one component gradient per step.

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::Result;
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct Sgd {
    x: ParamVector,
    epoch: usize,
}

impl Sgd {
    pub fn new(x0: ParamVector) -> Self {
        Sgd { x: x0, epoch: 0 }
    }
}

impl Optimizer for Sgd {
    fn method(&self) -> Method {
        Method::Sgd
    }

    fn run_epoch(
        &mut self,
        oracle: &mut DynOracle<'_>,
        perm: &Permutation,
        gamma: f64,
        observer: &mut dyn StepObserver,
    ) -> Result<()> {
        check_epoch_args(oracle, perm, gamma, &self.x)?;
        let mut g = vec![0.0; self.x.dim()];
        for (t, &i) in perm.as_slice().iter().enumerate() {
            oracle.component_gradient_into(i, &self.x, &mut g)?;
            observer.on_step(&StepEvent {
                epoch: self.epoch,
                step: t,
                index: Some(i),
                point: &self.x,
                gradient: Some(&g),
                anchor_gradient: None,
                direction: &g,
            });
            descend(&mut self.x, gamma, &g, self.epoch, t)?;
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
        MemoryFootprint { persistent_vectors: 1, scratch_vectors: 1, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}
