//! Classic SVRG over shuffled epochs: one exact full gradient at the
//! reference point at the start of every epoch.

use super::{check_bounded, check_epoch_args, descend, MemoryFootprint, Method, Optimizer, StepEvent, StepObserver};
use crate::error::Result;
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

#[derive(Clone, Debug)]
pub struct Svrg {
    x: ParamVector,
    omega: ParamVector,
    full: ParamVector,
    epoch: usize,
}

impl Svrg {
    pub fn new(x0: ParamVector) -> Self {
        let d = x0.dim();
        Svrg { omega: x0.clone(), x: x0, full: ParamVector::zeros(d), epoch: 0 }
    }

    pub fn omega(&self) -> &ParamVector {
        &self.omega
    }

    /// grad f(omega) from the last epoch start.
    pub fn full_gradient(&self) -> &ParamVector {
        &self.full
    }
}

impl Optimizer for Svrg {
    fn method(&self) -> Method {
        Method::Svrg
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
        self.omega.clone_from(&self.x);
        oracle.full_gradient_into(&self.omega, &mut self.full)?;

        let mut g_x = vec![0.0; d];
        let mut g_omega = vec![0.0; d];
        let mut direction = vec![0.0; d];
        for (t, &i) in perm.as_slice().iter().enumerate() {
            oracle.component_gradient_into(i, &self.x, &mut g_x)?;
            oracle.component_gradient_into(i, &self.omega, &mut g_omega)?;
            for (((dir, gx), gw), full) in direction.iter_mut().zip(&g_x).zip(&g_omega).zip(self.full.iter()) {
                *dir = gx - gw + full;
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
        MemoryFootprint { persistent_vectors: 3, scratch_vectors: 3, dim: self.x.dim() }
    }

    fn box_clone(&self) -> Box<dyn Optimizer> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_quadratic_suite;

    #[test]
    fn first_step_follows_full_gradient() {
        struct First(Option<Vec<f64>>);
        impl StepObserver for First {
            fn on_step(&mut self, e: &StepEvent<'_>) {
                if self.0.is_none() {
                    self.0 = Some(e.direction.to_vec());
                }
            }
        }
        let p = make_quadratic_suite(6, 3, 4.0, 1.0, 2).unwrap();
        let mut oracle = DynOracle::erased(&p);
        let x0 = ParamVector::from_vec(vec![1.0, -2.0, 0.5]);
        let expected = crate::oracle::exact_gradient(&p, &x0).unwrap();
        let mut opt = Svrg::new(x0);
        let mut first = First(None);
        opt.run_epoch(&mut oracle, &crate::shuffling::fisher_yates(6, 3, 0), 0.01, &mut first).unwrap();
        assert_eq!(first.0.unwrap(), expected.into_inner());
    }
}
