//! SAG and SAGA, the table-based baselines.
//!
//! Both keep the last gradient seen for every component plus their sum,
//! so memory grows as (n + 1) d-vectors. They differ only in where the
//! 1/n factor sits:
//!
//! ```text
//! SAG:   x <- x - (gamma/n) (g_i - stored_i + sum_j stored_j)
//! SAGA:  x <- x - gamma     (g_i - stored_i + (1/n) sum_j stored_j)
//! ```

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::{contract, Result};
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableVariant {
    Sag,
    Saga,
}

/// Per-component gradient table with an incrementally maintained sum.
#[derive(Clone, Debug)]
pub struct SagaMemory {
    stored: Vec<ParamVector>,
    running_sum: ParamVector,
    initialized: bool,
}

impl SagaMemory {
    pub fn new(n: usize, dim: usize) -> Self {
        SagaMemory { stored: vec![ParamVector::zeros(dim); n], running_sum: ParamVector::zeros(dim), initialized: false }
    }

    /// Fills the table with grad f_i(x) for every i; costs n component calls.
    pub fn initialize(&mut self, oracle: &mut DynOracle<'_>, x: &[f64]) -> Result<()> {
        if self.stored.len() != oracle.n() {
            return Err(contract(format!("table of {} entries for n = {}", self.stored.len(), oracle.n())));
        }
        self.running_sum.set_zero();
        for (i, slot) in self.stored.iter_mut().enumerate() {
            oracle.component_gradient_into(i, x, slot)?;
            for (s, g) in self.running_sum.iter_mut().zip(slot.iter()) {
                *s += g;
            }
        }
        self.initialized = true;
        Ok(())
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn stored(&self, i: usize) -> &ParamVector {
        &self.stored[i]
    }

    pub fn running_sum(&self) -> &ParamVector {
        &self.running_sum
    }

    /// Sum of the stored gradients recomputed from scratch in index order.
    pub fn recomputed_sum(&self) -> ParamVector {
        let dim = self.running_sum.dim();
        let mut sum = ParamVector::zeros(dim);
        for s in &self.stored {
            for (acc, v) in sum.iter_mut().zip(s.iter()) {
                *acc += v;
            }
        }
        sum
    }

    /// Length-d buffers held: one per component plus the sum.
    pub fn vector_count(&self) -> usize {
        self.stored.len() + 1
    }
}

/// Shared body of [`sag_step`] and [`saga_step`]; writes the applied
/// direction into `direction` and the fresh gradient into `gradient`.
fn table_step(
    variant: TableVariant,
    memory: &SagaMemory,
    oracle: &mut DynOracle<'_>,
    i: usize,
    x: &[f64],
    gradient: &mut [f64],
    direction: &mut [f64],
) -> Result<()> {
    if !memory.initialized {
        return Err(contract("gradient table used before initialization"));
    }
    oracle.component_gradient_into(i, x, gradient)?;
    let n = memory.stored.len() as f64;
    let stored = &memory.stored[i];
    match variant {
        TableVariant::Sag => {
            for (((d, g), s), sum) in direction.iter_mut().zip(gradient.iter()).zip(stored.iter()).zip(memory.running_sum.iter()) {
                *d = (g - s + sum) / n;
            }
        }
        TableVariant::Saga => {
            for (((d, g), s), sum) in direction.iter_mut().zip(gradient.iter()).zip(stored.iter()).zip(memory.running_sum.iter()) {
                *d = g - s + sum / n;
            }
        }
    }
    Ok(())
}

fn commit(memory: &mut SagaMemory, i: usize, gradient: &[f64]) {
    let slot = &mut memory.stored[i];
    for ((sum, s), g) in memory.running_sum.iter_mut().zip(slot.iter_mut()).zip(gradient) {
        *sum += g - *s;
        *s = *g;
    }
}

fn single_step(variant: TableVariant, memory: &mut SagaMemory, oracle: &mut DynOracle<'_>, i: usize, x: &mut [f64], gamma: f64) -> Result<()> {
    let d = x.len();
    let mut gradient = vec![0.0; d];
    let mut direction = vec![0.0; d];
    table_step(variant, memory, oracle, i, x, &mut gradient, &mut direction)?;
    descend(x, gamma, &direction, 0, 0)?;
    commit(memory, i, &gradient);
    Ok(())
}

/// One SAG update at component i; one component call.
pub fn sag_step(memory: &mut SagaMemory, oracle: &mut DynOracle<'_>, i: usize, x: &mut [f64], gamma: f64) -> Result<()> {
    single_step(TableVariant::Sag, memory, oracle, i, x, gamma)
}

/// One SAGA update at component i; one component call.
pub fn saga_step(memory: &mut SagaMemory, oracle: &mut DynOracle<'_>, i: usize, x: &mut [f64], gamma: f64) -> Result<()> {
    single_step(TableVariant::Saga, memory, oracle, i, x, gamma)
}

#[derive(Clone, Debug)]
pub struct Saga {
    x: ParamVector,
    memory: Option<SagaMemory>,
    variant: TableVariant,
    epoch: usize,
}

impl Saga {
    pub fn new(x0: ParamVector, variant: TableVariant) -> Self {
        Saga { x: x0, memory: None, variant, epoch: 0 }
    }

    pub fn variant(&self) -> TableVariant {
        self.variant
    }

    /// The gradient table, allocated on the first epoch.
    pub fn table(&self) -> Option<&SagaMemory> {
        self.memory.as_ref()
    }
}

impl Optimizer for Saga {
    fn method(&self) -> Method {
        match self.variant {
            TableVariant::Sag => Method::Sag,
            TableVariant::Saga => Method::Saga,
        }
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
        let memory = match &mut self.memory {
            Some(m) => m,
            slot @ None => {
                let mut m = SagaMemory::new(oracle.n(), d);
                m.initialize(oracle, &self.x)?;
                slot.insert(m)
            }
        };
        let mut gradient = vec![0.0; d];
        let mut direction = vec![0.0; d];
        for (t, &i) in perm.as_slice().iter().enumerate() {
            table_step(self.variant, memory, oracle, i, &self.x, &mut gradient, &mut direction)?;
            observer.on_step(&StepEvent {
                epoch: self.epoch,
                step: t,
                index: Some(i),
                point: &self.x,
                gradient: Some(&gradient),
                anchor_gradient: Some(memory.stored(i)),
                direction: &direction,
            });
            descend(&mut self.x, gamma, &direction, self.epoch, t)?;
            commit(memory, i, &gradient);
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
        let table = self.memory.as_ref().map_or(0, SagaMemory::vector_count);
        MemoryFootprint { persistent_vectors: 1 + table, scratch_vectors: 2, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}
