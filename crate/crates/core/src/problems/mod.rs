//! Problem zoo: strongly convex quadratics, sigmoid least squares and the
//! zero-chain hard instance.

mod quadratic;
mod sigmoid;
pub mod zero_chain;

pub use quadratic::QuadraticProblem;
pub use sigmoid::{sigmoid, SigmoidLeastSquares};
pub use zero_chain::{prog, ProgressMeasure, ZeroChainProblem};
