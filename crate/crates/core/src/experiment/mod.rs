//! Configured runs, telemetry and the invariant suite.

pub mod checks;
mod config;
mod csv;
mod runner;

pub use config::{FeatureScaling, GammaSpec, ProblemSpec, RunConfig};
pub use csv::{emit_csv, parse_csv, RunRecord, CSV_HEADER};
pub use runner::{
    build_problem, cache_path, presolve, resolve_gammas, run_cell, run_experiment, run_on_problem, sidecar, write_outputs,
    BuiltProblem, CellResult, GridCell, RunOutcome, RunStatus, RunSummary, PRESOLVE_GRAD_SQ_TOL, PRESOLVE_MAX_ITERS,
};
