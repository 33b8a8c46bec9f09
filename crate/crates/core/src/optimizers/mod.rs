//! Epoch-based finite-sum optimizers.
//!
//! Every method consumes one [`Permutation`] per epoch and reports each
//! parameter update to a [`StepObserver`], which is how the reference
//! replayers check the algebraic identities without touching the tally.
//!
//! | method     | gradient units per epoch | d-vectors kept between epochs |
//! |------------|--------------------------|-------------------------------|
//! | SGD        | n                        | 1                             |
//! | NFG-SVRG   | 2n                       | 4                             |
//! | NFG-SARAH  | 2n                       | 5                             |
//! | SVRG       | 3n (2n + one full pass)  | 3                             |
//! | SARAH      | 3n (2n + one full pass)  | 3                             |
//! | SAG, SAGA  | n (+ n once, to fill the table) | n + 2                  |

mod nfg_sarah;
mod nfg_svrg;
mod saga;
mod sarah;
mod sgd;
mod stepsize;
mod svrg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use nfg_sarah::NfgSarah;
pub use nfg_svrg::NfgSvrg;
pub use saga::{sag_step, saga_step, Saga, SagaMemory, TableVariant};
pub use sarah::Sarah;
pub use sgd::Sgd;
pub use stepsize::{log_grid, theoretical_stepsize, StepsizePolicy, GRID_POINTS};
pub use svrg::Svrg;

use crate::error::{contract, Error, Result};
use crate::oracle::DynOracle;
use crate::shuffling::Permutation;
use crate::vector::{self, ParamVector};

/// Iterates with a norm above this are treated as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e100;

/// One parameter update, reported before the iterate moves.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub epoch: usize,
    /// Inner-step number in the method's own numbering (NFG-SARAH's
    /// restart step is 0 and its gradient steps run 1..=n).
    pub step: usize,
    /// Component visited, or `None` for a step that evaluates nothing.
    pub index: Option<usize>,
    /// Iterate before the update.
    pub point: &'a [f64],
    /// Gradient of the visited component at `point`.
    pub gradient: Option<&'a [f64]>,
    /// Gradient of the same component at the method's anchor
    /// (reference point for SVRG variants, previous iterate for SARAH).
    pub anchor_gradient: Option<&'a [f64]>,
    /// Direction actually applied: x <- x - gamma * direction.
    pub direction: &'a [f64],
}

pub trait StepObserver {
    fn on_step(&mut self, event: &StepEvent<'_>);
}

/// Observer that ignores every step.
pub struct NoObserver;

impl StepObserver for NoObserver {
    fn on_step(&mut self, _event: &StepEvent<'_>) {}
}

/// Number of length-d buffers an optimizer holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    /// Vectors carried from one epoch to the next.
    pub persistent_vectors: usize,
    /// Vectors allocated for the duration of one epoch.
    pub scratch_vectors: usize,
    pub dim: usize,
}

impl MemoryFootprint {
    pub fn total_floats(&self) -> usize {
        (self.persistent_vectors + self.scratch_vectors) * self.dim
    }
}

pub trait Optimizer: Send {
    fn method(&self) -> Method;

    /// Runs one pass over `perm`.
    fn run_epoch(
        &mut self,
        oracle: &mut DynOracle<'_>,
        perm: &Permutation,
        gamma: f64,
        observer: &mut dyn StepObserver,
    ) -> Result<()>;

    /// Current iterate. Between epochs this is the next epoch's starting
    /// point: omega_{s+1} for the SVRG variants, x_{s+1}^0 for SARAH.
    fn iterate(&self) -> &[f64];

    /// Number of completed epochs.
    fn epochs_done(&self) -> usize;

    fn memory(&self) -> MemoryFootprint;

    fn box_clone(&self) -> Box<dyn Optimizer>;
}

impl Clone for Box<dyn Optimizer> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sgd,
    NfgSvrg,
    NfgSarah,
    Svrg,
    Sarah,
    Sag,
    Saga,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Sgd, Method::NfgSvrg, Method::NfgSarah, Method::Svrg, Method::Sarah, Method::Sag, Method::Saga];

    pub fn build(self, x0: ParamVector) -> Box<dyn Optimizer> {
        match self {
            Method::Sgd => Box::new(Sgd::new(x0)),
            Method::NfgSvrg => Box::new(NfgSvrg::new(x0)),
            Method::NfgSarah => Box::new(NfgSarah::new(x0)),
            Method::Svrg => Box::new(Svrg::new(x0)),
            Method::Sarah => Box::new(Sarah::new(x0)),
            Method::Sag => Box::new(Saga::new(x0, TableVariant::Sag)),
            Method::Saga => Box::new(Saga::new(x0, TableVariant::Saga)),
        }
    }

    /// SARAH variants take n + 1 updates per epoch.
    pub fn is_sarah_family(self) -> bool {
        matches!(self, Method::NfgSarah | Method::Sarah)
    }

    /// Stepsize policy used for `--gamma theory`: 1/(20 L (n+1)) for the
    /// SARAH variants, 1/(20 L n) otherwise.
    pub fn theory_policy(self) -> StepsizePolicy {
        if self.is_sarah_family() {
            StepsizePolicy::TheoreticalNfgSarah
        } else {
            StepsizePolicy::TheoreticalNfgSvrg
        }
    }

    /// Steady-state gradient units per epoch.
    pub fn units_per_epoch(self, n: usize) -> u64 {
        let n = n as u64;
        match self {
            Method::Sgd | Method::Sag | Method::Saga => n,
            Method::NfgSvrg | Method::NfgSarah => 2 * n,
            Method::Svrg | Method::Sarah => 3 * n,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(Method::Sgd),
            "nfg-svrg" | "nfg_svrg" => Ok(Method::NfgSvrg),
            "nfg-sarah" | "nfg_sarah" => Ok(Method::NfgSarah),
            "svrg" => Ok(Method::Svrg),
            "sarah" => Ok(Method::Sarah),
            "sag" => Ok(Method::Sag),
            "saga" => Ok(Method::Saga),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (sgd|nfg-svrg|nfg-sarah|svrg|sarah|sag|saga)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sgd => "sgd",
            Method::NfgSvrg => "nfg-svrg",
            Method::NfgSarah => "nfg-sarah",
            Method::Svrg => "svrg",
            Method::Sarah => "sarah",
            Method::Sag => "sag",
            Method::Saga => "saga",
        })
    }
}

/// Lyapunov value f(x) - f* + (gamma * steps / 10) ||v||^2 used in the
/// linear-rate analysis; `steps` is n for NFG-SVRG and n + 1 for NFG-SARAH.
pub fn lyapunov_value(gap: f64, gamma: f64, steps: usize, estimate_norm_sq: f64) -> f64 {
    gap + 0.1 * gamma * steps as f64 * estimate_norm_sq
}

pub(crate) fn check_epoch_args(oracle: &DynOracle<'_>, perm: &Permutation, gamma: f64, x: &[f64]) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(contract(format!("stepsize must be positive and finite, got {gamma}")));
    }
    if perm.len() != oracle.n() {
        return Err(contract(format!("permutation of length {} for n = {}", perm.len(), oracle.n())));
    }
    if x.len() != oracle.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: x.len() });
    }
    Ok(())
}

/// x <- x - gamma * direction, failing on a non-finite result.
pub(crate) fn descend(x: &mut [f64], gamma: f64, direction: &[f64], epoch: usize, step: usize) -> Result<()> {
    let mut finite = true;
    for (xi, di) in x.iter_mut().zip(direction) {
        *xi -= gamma * di;
        finite &= xi.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, step, gamma })
    }
}

pub(crate) fn check_bounded(x: &[f64], gamma: f64, epoch: usize, step: usize) -> Result<()> {
    if vector::norm(x) > DIVERGENCE_THRESHOLD {
        return Err(Error::Divergence { epoch, step, gamma });
    }
    Ok(())
}
