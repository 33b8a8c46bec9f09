//! Variance-reduced shuffling methods that never compute a full gradient,
//! together with the classic baselines, test problems, dataset loaders and
//! a small benchmark harness.
//!
//! The usual entry points are [`problems`] for objectives, [`optimizers`]
//! for the methods, [`shuffling`] for epoch orders and [`experiment`] for
//! configured runs that emit per-epoch telemetry.

pub mod data;
pub mod error;
pub mod experiment;
pub mod optimizers;
pub mod oracle;
pub mod problems;
pub mod reference;
pub mod shuffling;
pub mod vector;

pub use error::{Error, ParseError, Result};
pub use oracle::{CountingOracle, DynOracle, FiniteSumProblem, OracleTally};
pub use optimizers::{Method, Optimizer, StepsizePolicy};
pub use shuffling::{Permutation, ShuffleKind, ShuffleStrategy};
pub use vector::ParamVector;
