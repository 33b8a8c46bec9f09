//! Executes a [`RunConfig`]: builds the problem, resolves the stepsize,
//! runs the epochs and collects one [`RunRecord`] per epoch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FeatureScaling, GammaSpec, ProblemSpec, RunConfig};
use super::csv::{emit_csv, RunRecord};
use crate::data::{load_libsvm, make_quadratic_suite, make_sigmoid_problem};
use crate::error::{Error, Result};
use crate::optimizers::{log_grid, theoretical_stepsize, Method, NoObserver, DIVERGENCE_THRESHOLD, GRID_POINTS};
use crate::oracle::{exact_gradient, objective, DynOracle, FiniteSumProblem};
use crate::problems::{SigmoidLeastSquares, ZeroChainProblem};
use crate::shuffling::ShuffleStrategy;
use crate::vector::ParamVector;

/// A constructed objective with its optimal value, when known.
pub struct BuiltProblem {
    pub problem: Box<dyn FiniteSumProblem>,
    pub optimal_value: Option<f64>,
    /// Full-gradient evaluations spent computing `optimal_value`; never
    /// part of a run's tally.
    pub presolve_full_gradients: u64,
    /// Whether `optimal_value` came from a cache file.
    pub presolve_cached: bool,
}

/// Budget of the gradient-descent solve used for f* on sigmoid problems.
pub const PRESOLVE_MAX_ITERS: usize = 20_000;
pub const PRESOLVE_GRAD_SQ_TOL: f64 = 1e-24;

#[derive(Serialize, Deserialize)]
struct PresolveCache {
    optimal_value: f64,
    full_gradients: u64,
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem> {
    match spec {
        ProblemSpec::Quadratic { n, dim, smoothness, mu, seed } => {
            let p = make_quadratic_suite(*n, *dim, *smoothness, *mu, *seed)?;
            let optimal_value = p.optimal_value();
            Ok(BuiltProblem { problem: Box::new(p), optimal_value, presolve_full_gradients: 0, presolve_cached: false })
        }
        ProblemSpec::ZeroChain { n, dim } => Ok(BuiltProblem {
            problem: Box::new(ZeroChainProblem::standard(*dim, *n)?),
            optimal_value: None,
            presolve_full_gradients: 0,
            presolve_cached: false,
        }),
        ProblemSpec::Sigmoid { n, dim, seed } => {
            let p = make_sigmoid_problem(*n, *dim, *seed)?;
            let (f_star, calls) = presolve(&p)?;
            Ok(BuiltProblem { problem: Box::new(p), optimal_value: Some(f_star), presolve_full_gradients: calls, presolve_cached: false })
        }
        ProblemSpec::Libsvm { path, rows, scaling } => {
            let mut data = load_libsvm(path)?;
            if let Some(r) = rows {
                data = data.head(*r)?;
            }
            if *scaling == FeatureScaling::MaxAbs {
                data = data.scaled_max_abs();
            }
            let p = SigmoidLeastSquares::from_dataset(&data)?;
            let cache = cache_path(path, *rows, *scaling);
            if let Some(hit) = read_cache(&cache) {
                return Ok(BuiltProblem {
                    problem: Box::new(p),
                    optimal_value: Some(hit.optimal_value),
                    presolve_full_gradients: hit.full_gradients,
                    presolve_cached: true,
                });
            }
            let (f_star, calls) = presolve(&p)?;
            // A read-only dataset directory only costs a repeated solve next time.
            let _ = std::fs::write(
                &cache,
                serde_json::to_string(&PresolveCache { optimal_value: f_star, full_gradients: calls })
                    .expect("cache record serializes"),
            );
            Ok(BuiltProblem { problem: Box::new(p), optimal_value: Some(f_star), presolve_full_gradients: calls, presolve_cached: false })
        }
    }
}

/// `<dataset>.rows-<k|all>.<scaling>.fstar`, next to the dataset.
pub fn cache_path(dataset: &Path, rows: Option<usize>, scaling: FeatureScaling) -> PathBuf {
    let rows = rows.map_or_else(|| "all".to_string(), |r| r.to_string());
    let mut name = dataset.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".rows-{rows}.{scaling}.fstar"));
    dataset.with_file_name(name)
}

fn read_cache(path: &Path) -> Option<PresolveCache> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str::<PresolveCache>(&text).ok().filter(|c| c.optimal_value.is_finite())
}

/// Gradient descent with Armijo backtracking from the origin. Returns the
/// best objective value reached and the number of full gradients used.
pub fn presolve<P: FiniteSumProblem + ?Sized>(problem: &P) -> Result<(f64, u64)> {
    let d = problem.dim();
    let mut x = vec![0.0; d];
    let mut f = objective(problem, &x)?;
    let mut step = problem.smoothness().map_or(1.0, |l| 1.0 / l);
    let mut calls = 0u64;
    let mut trial = vec![0.0; d];
    for _ in 0..PRESOLVE_MAX_ITERS {
        let g = exact_gradient(problem, &x)?;
        calls += 1;
        let g_sq = g.norm_sq();
        if g_sq <= PRESOLVE_GRAD_SQ_TOL {
            break;
        }
        step *= 2.0;
        loop {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(g.iter()) {
                *t = xi - step * gi;
            }
            let f_trial = objective(problem, &trial)?;
            if f_trial <= f - 0.5 * step * g_sq {
                x.copy_from_slice(&trial);
                f = f_trial;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Ok((f, calls));
            }
        }
    }
    Ok((f, calls))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Ran every epoch; no targets were set.
    Completed,
    TargetReached,
    TargetMissed,
    Diverged,
}

impl RunStatus {
    pub fn is_failure(self) -> bool {
        matches!(self, RunStatus::TargetMissed | RunStatus::Diverged)
    }
}

/// Result of one (method, gamma) run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub gamma: f64,
    pub status: RunStatus,
    pub records: Vec<RunRecord>,
    /// Component units consumed, including any partial epoch before a divergence.
    pub oracle_units: u64,
    pub final_loss: Option<f64>,
    pub epochs_to_target: Option<usize>,
    pub units_to_target: Option<u64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub status: RunStatus,
    pub final_loss: Option<f64>,
    pub oracle_units: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub n: usize,
    pub dim: usize,
    pub method: Method,
    pub gamma_policy: String,
    /// Stepsize of the reported run (the best cell under a grid policy).
    pub gamma: f64,
    pub shuffle: ShuffleStrategy,
    pub status: RunStatus,
    pub epochs_run: usize,
    pub oracle_units: u64,
    pub epochs_to_target: Option<usize>,
    pub units_to_target: Option<u64>,
    pub final_loss: Option<f64>,
    pub final_gap: Option<f64>,
    pub optimal_value: Option<f64>,
    pub presolve_full_gradients: u64,
    pub presolve_cached: bool,
    /// Offending stepsize when the run diverged.
    pub failed_gamma: Option<f64>,
    pub error: Option<String>,
    /// Every cell of a grid policy, in grid order; empty otherwise.
    pub grid: Vec<GridCell>,
    pub wall_seconds: f64,
}

pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub summary: RunSummary,
    /// Per-stepsize results; a single entry unless the policy is a grid.
    pub cells: Vec<CellResult>,
}

/// Stepsizes a config asks for.
pub fn resolve_gammas(config: &RunConfig, problem: &dyn FiniteSumProblem) -> Result<Vec<f64>> {
    let theory = || -> Result<f64> {
        let l = problem
            .smoothness()
            .ok_or_else(|| Error::Config(format!("{} has no smoothness constant for a theoretical stepsize", problem.name())))?;
        theoretical_stepsize(&config.method.theory_policy(), l, problem.n())
    };
    Ok(match config.gamma {
        GammaSpec::Fixed(g) => vec![g],
        GammaSpec::Theory => vec![theory()?],
        GammaSpec::Grid => log_grid(theory()?, GRID_POINTS),
    })
}

pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let built = build_problem(&config.problem)?;
    run_on_problem(config, &built)
}

/// Runs `config` against an already constructed problem.
pub fn run_on_problem(config: &RunConfig, built: &BuiltProblem) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let problem: &dyn FiniteSumProblem = built.problem.as_ref();
    if config.target_gap.is_some() && built.optimal_value.is_none() {
        return Err(Error::Config("target_gap needs a known optimal value".into()));
    }
    let gammas = resolve_gammas(config, problem)?;
    let grid = gammas.len() > 1;
    let cells: Vec<CellResult> = if grid {
        gammas.par_iter().map(|&g| run_cell(config, problem, built.optimal_value, g, false, started)).collect::<Result<_>>()?
    } else {
        vec![run_cell(config, problem, built.optimal_value, gammas[0], true, started)?]
    };

    let best = if grid { best_cell(&cells) } else { 0 };
    let chosen = &cells[best];
    let status = if grid && chosen.status != RunStatus::Diverged {
        // cells run the full budget; report whether the best one met the targets
        match (has_targets(config), chosen.epochs_to_target) {
            (false, _) => RunStatus::Completed,
            (true, Some(_)) => RunStatus::TargetReached,
            (true, None) => RunStatus::TargetMissed,
        }
    } else {
        chosen.status
    };
    let summary = RunSummary {
        problem: problem.name().to_string(),
        n: problem.n(),
        dim: problem.dim(),
        method: config.method,
        gamma_policy: config.gamma.to_string(),
        gamma: chosen.gamma,
        shuffle: config.shuffle,
        status,
        epochs_run: chosen.records.len(),
        oracle_units: chosen.oracle_units,
        epochs_to_target: chosen.epochs_to_target,
        units_to_target: chosen.units_to_target,
        final_loss: chosen.final_loss,
        final_gap: chosen.records.last().and_then(|r| r.loss_gap),
        optimal_value: built.optimal_value,
        presolve_full_gradients: built.presolve_full_gradients,
        presolve_cached: built.presolve_cached,
        failed_gamma: (status == RunStatus::Diverged).then_some(chosen.gamma),
        error: chosen.error.clone(),
        grid: if grid {
            cells
                .iter()
                .map(|c| GridCell { gamma: c.gamma, status: c.status, final_loss: c.final_loss, oracle_units: c.oracle_units })
                .collect()
        } else {
            Vec::new()
        },
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { records: chosen.records.clone(), summary, cells })
}

fn has_targets(config: &RunConfig) -> bool {
    config.target_grad_sq.is_some() || config.target_gap.is_some()
}

/// Lowest final loss among cells that did not diverge; ties go to the
/// smaller stepsize. Falls back to the first cell if all diverged.
fn best_cell(cells: &[CellResult]) -> usize {
    cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.status != RunStatus::Diverged)
        .filter_map(|(i, c)| c.final_loss.map(|f| (i, f)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map_or(0, |(i, _)| i)
}

fn targets_met(config: &RunConfig, record: &RunRecord) -> bool {
    if !has_targets(config) {
        return false;
    }
    let grad_ok = config.target_grad_sq.is_none_or(|t| record.running_mean_grad_sq <= t);
    let gap_ok = config.target_gap.is_none_or(|t| record.loss_gap.is_some_and(|g| g <= t));
    grad_ok && gap_ok
}

/// One stepsize, `config.epochs` epochs (fewer when `early_stop` and the
/// targets are met).
pub fn run_cell(
    config: &RunConfig,
    problem: &dyn FiniteSumProblem,
    optimal_value: Option<f64>,
    gamma: f64,
    early_stop: bool,
    started: Instant,
) -> Result<CellResult> {
    let n = problem.n();
    let mut optimizer = config.method.build(ParamVector::from_vec(vec![config.init; problem.dim()]));
    let mut oracle = DynOracle::new(problem);
    let mut records: Vec<RunRecord> = Vec::with_capacity(config.epochs.min(1 << 16));
    let mut grad_sum = 0.0;
    let mut status = if has_targets(config) { RunStatus::TargetMissed } else { RunStatus::Completed };
    let mut error = None;
    let mut epochs_to_target = None;
    let mut units_to_target = None;
    let mut final_loss = None;

    for s in 0..config.epochs {
        let perm = config.shuffle.permutation_for_epoch(s as u64, n)?;
        match optimizer.run_epoch(&mut oracle, &perm, gamma, &mut NoObserver) {
            Ok(()) => {}
            Err(e @ (Error::Divergence { .. } | Error::NonFinite { .. } | Error::NonFiniteLoss { .. })) => {
                status = RunStatus::Diverged;
                error = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
        let x = optimizer.iterate();
        let measured = objective(problem, x).and_then(|f| exact_gradient(problem, x).map(|g| (f, g.norm_sq())));
        let (loss, grad_norm_sq) = match measured {
            Ok((f, g)) if f.abs() <= DIVERGENCE_THRESHOLD && g.is_finite() => (f, g),
            Ok(_) => {
                status = RunStatus::Diverged;
                error = Some(format!("loss left the finite range at epoch {s}, gamma = {gamma:e}"));
                break;
            }
            Err(e) => {
                status = RunStatus::Diverged;
                error = Some(e.to_string());
                break;
            }
        };
        grad_sum += grad_norm_sq;
        let record = RunRecord {
            epoch: s + 1,
            oracle_units: oracle.component_units(),
            grad_norm_sq,
            loss_gap: optimal_value.map(|f_star| loss - f_star),
            running_mean_grad_sq: grad_sum / (s + 1) as f64,
            seconds: if config.wall_clock { started.elapsed().as_secs_f64() } else { 0.0 },
        };
        final_loss = Some(loss);
        let met = epochs_to_target.is_none() && targets_met(config, &record);
        if met {
            epochs_to_target = Some(record.epoch);
            units_to_target = Some(record.oracle_units);
        }
        records.push(record);
        if met && early_stop {
            status = RunStatus::TargetReached;
            break;
        }
    }
    if status == RunStatus::TargetMissed && epochs_to_target.is_some() {
        status = RunStatus::TargetReached;
    }
    Ok(CellResult {
        gamma,
        status,
        records,
        oracle_units: oracle.component_units(),
        final_loss,
        epochs_to_target,
        units_to_target,
        error,
    })
}

/// Sidecar path for a CSV output: `<out>.summary.json`, or
/// `<out>.cell-<k>.csv` for grid cells.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes the reported CSV to `out`, the summary to `<out>.summary.json`
/// and, for grids, every cell to `<out>.cell-<k>.csv`.
pub fn write_outputs(outcome: &RunOutcome, out: &Path) -> Result<()> {
    if !outcome.records.is_empty() {
        write_file(out, &emit_csv(&outcome.records)?)?;
    }
    if outcome.cells.len() > 1 {
        for (k, cell) in outcome.cells.iter().enumerate() {
            if !cell.records.is_empty() {
                write_file(&sidecar(out, &format!(".cell-{k:02}.csv")), &emit_csv(&cell.records)?)?;
            }
        }
    }
    let json = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    write_file(&sidecar(out, ".summary.json"), &(json + "\n"))
}
