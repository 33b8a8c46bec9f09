//! Brute-force reference implementations used to check the optimizers.
//!
//! Everything here trades memory or time for directness: the replayer
//! stores every gradient of an epoch, the differentiator uses central
//! differences of the loss, and the enumerator walks every permutation
//! sequence of a tiny instance. None of it touches a run's tally.

use crate::error::{contract, Result};
use crate::optimizers::{Method, Optimizer, StepEvent, StepObserver, NoObserver};
use crate::oracle::{DynOracle, FiniteSumProblem};
use crate::shuffling::Permutation;
use crate::vector::ParamVector;

/// One logged update.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayRecord {
    pub step: usize,
    pub index: Option<usize>,
    /// Iterate before the update.
    pub point: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
    pub anchor_gradient: Option<Vec<f64>>,
    pub direction: Vec<f64>,
}

/// Every update of one epoch, in execution order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayLog {
    pub epoch: usize,
    pub n: usize,
    pub records: Vec<ReplayRecord>,
}

impl ReplayLog {
    pub fn new(epoch: usize, n: usize) -> Self {
        ReplayLog { epoch, n, records: Vec::new() }
    }

    /// Records that carry a fresh component gradient.
    pub fn gradient_records(&self) -> impl Iterator<Item = &ReplayRecord> {
        self.records.iter().filter(|r| r.gradient.is_some())
    }

    /// True when n gradient-bearing records are present.
    pub fn is_complete(&self) -> bool {
        self.gradient_records().count() == self.n
    }
}

/// Observer that splits a run's updates into one [`ReplayLog`] per epoch.
#[derive(Clone, Debug)]
pub struct ReplayRecorder {
    n: usize,
    pub logs: Vec<ReplayLog>,
}

impl ReplayRecorder {
    pub fn new(n: usize) -> Self {
        ReplayRecorder { n, logs: Vec::new() }
    }

    pub fn log(&self, epoch: usize) -> Option<&ReplayLog> {
        self.logs.iter().find(|l| l.epoch == epoch)
    }
}

impl StepObserver for ReplayRecorder {
    fn on_step(&mut self, e: &StepEvent<'_>) {
        if self.logs.last().is_none_or(|l| l.epoch != e.epoch) {
            self.logs.push(ReplayLog::new(e.epoch, self.n));
        }
        let log = self.logs.last_mut().expect("log pushed above");
        log.records.push(ReplayRecord {
            step: e.step,
            index: e.index,
            point: e.point.to_vec(),
            gradient: e.gradient.map(<[f64]>::to_vec),
            anchor_gradient: e.anchor_gradient.map(<[f64]>::to_vec),
            direction: e.direction.to_vec(),
        });
    }
}

/// Mean of the logged component gradients, summed in ascending step order.
pub fn replay_epoch_average(log: &ReplayLog) -> Result<ParamVector> {
    if log.n == 0 || !log.is_complete() {
        return Err(contract(format!(
            "incomplete log: {} gradients for n = {}",
            log.gradient_records().count(),
            log.n
        )));
    }
    let mut records: Vec<&ReplayRecord> = log.gradient_records().collect();
    records.sort_by_key(|r| r.step);
    let dim = records[0].point.len();
    let mut sum = vec![0.0; dim];
    for r in records {
        let g = r.gradient.as_ref().expect("filtered on gradient");
        for (s, v) in sum.iter_mut().zip(g) {
            *s += v;
        }
    }
    let inv = 1.0 / log.n as f64;
    Ok(sum.into_iter().map(|s| s * inv).collect::<Vec<_>>().into())
}

/// Both sides of the partial-sum identity for the 1/n-scaled recursion
/// v^t = v^{t-1} + (1/n)(g^t - g_prev^t):
///
/// ```text
/// sum_{t=k}^{n} v^t  =  (1/n) sum_{t=k+1}^{n} (n - t + 1)(g^t - g_prev^t) + (n - k + 1) v^k
/// ```
///
/// Returns `(lhs, rhs)` for k = 0..=n. The log must hold the restart step
/// (step 0) followed by steps 1..=n.
pub fn partial_sum_sides(log: &ReplayLog) -> Result<Vec<(ParamVector, ParamVector)>> {
    let n = log.n;
    let mut by_step: Vec<Option<&ReplayRecord>> = vec![None; n + 1];
    for r in &log.records {
        if r.step > n || by_step[r.step].is_some() {
            return Err(contract(format!("unexpected step {} in log", r.step)));
        }
        by_step[r.step] = Some(r);
    }
    let steps: Vec<&ReplayRecord> = by_step
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| contract("log is missing steps"))?;
    let dim = steps[0].direction.len();
    let mut innovations = vec![vec![0.0; dim]; n + 1];
    for t in 1..=n {
        let (g, a) = match (&steps[t].gradient, &steps[t].anchor_gradient) {
            (Some(g), Some(a)) => (g, a),
            _ => return Err(contract(format!("step {t} lacks gradients"))),
        };
        for ((out, gv), av) in innovations[t].iter_mut().zip(g).zip(a) {
            *out = gv - av;
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut sides = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut lhs = vec![0.0; dim];
        for step in &steps[k..] {
            for (l, v) in lhs.iter_mut().zip(&step.direction) {
                *l += v;
            }
        }
        let mut rhs = vec![0.0; dim];
        for (t, innovation) in innovations.iter().enumerate().skip(k + 1) {
            let w = (n - t + 1) as f64 * inv_n;
            for (r, delta) in rhs.iter_mut().zip(innovation) {
                *r += w * delta;
            }
        }
        let copies = (n - k + 1) as f64;
        for (r, v) in rhs.iter_mut().zip(&steps[k].direction) {
            *r += copies * v;
        }
        sides.push((lhs.into(), rhs.into()));
    }
    Ok(sides)
}

/// Central-difference gradient of the uncounted component loss.
pub fn finite_difference_gradient<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    i: usize,
    x: &[f64],
    h: f64,
) -> Result<ParamVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(contract(format!("difference step must be positive, got {h}")));
    }
    if i >= problem.n() {
        return Err(crate::Error::IndexOutOfRange { index: i, n: problem.n() });
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = problem.component_loss(i, &probe);
        probe[k] = x[k] - h;
        let down = problem.component_loss(i, &probe);
        probe[k] = x[k];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad.into())
}

/// Largest instance the enumerator accepts.
pub const MAX_ENUMERATION_N: usize = 6;
/// Cap on (n!)^epochs.
pub const MAX_TRAJECTORIES: u64 = 1_000_000;

/// Exact distribution of end points over uniformly random permutation
/// sequences; each trajectory has probability 1/count.
#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    pub count: u64,
    pub mean: ParamVector,
    pub endpoints: Vec<ParamVector>,
}

/// All permutations of 0..n in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut out = vec![Permutation::from_order(order.clone()).expect("identity is a bijection")];
    loop {
        let Some(pivot) = (1..n).rev().find(|&k| order[k - 1] < order[k]).map(|k| k - 1) else {
            return out;
        };
        let swap = (pivot + 1..n).rev().find(|&k| order[k] > order[pivot]).expect("pivot has a successor");
        order.swap(pivot, swap);
        order[pivot + 1..].reverse();
        out.push(Permutation::from_order(order.clone()).expect("permutation of a bijection"));
    }
}

/// Runs `method` from `x0` for `epochs` epochs over every sequence of
/// permutations (independent per epoch, as under random reshuffling).
pub fn enumerate_permutation_trajectories<P: FiniteSumProblem>(
    problem: &P,
    method: Method,
    gamma: f64,
    epochs: usize,
    x0: &[f64],
) -> Result<TrajectoryStats> {
    let n = problem.n();
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(contract(format!("enumeration needs 1 <= n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    if epochs == 0 {
        return Err(contract("enumeration needs at least one epoch"));
    }
    let perms = all_permutations(n);
    let per_epoch = perms.len() as u64;
    let total = (0..epochs).try_fold(1u64, |acc, _| acc.checked_mul(per_epoch).filter(|&t| t <= MAX_TRAJECTORIES));
    if total.is_none() {
        return Err(contract(format!("{n}!^{epochs} trajectories exceed the cap of {MAX_TRAJECTORIES}")));
    }

    let mut endpoints = Vec::new();
    let start = method.build(ParamVector::from(x0));
    walk(problem, &perms, gamma, epochs, start, &mut endpoints)?;

    let count = endpoints.len() as u64;
    let mut mean = vec![0.0; x0.len()];
    for e in &endpoints {
        for (m, v) in mean.iter_mut().zip(e.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    Ok(TrajectoryStats { count, mean: mean.into(), endpoints })
}

fn walk<P: FiniteSumProblem>(
    problem: &P,
    perms: &[Permutation],
    gamma: f64,
    remaining: usize,
    state: Box<dyn Optimizer>,
    out: &mut Vec<ParamVector>,
) -> Result<()> {
    if remaining == 0 {
        out.push(ParamVector::from(state.iterate()));
        return Ok(());
    }
    for perm in perms {
        let mut next = state.clone();
        let mut oracle = DynOracle::erased(problem);
        next.run_epoch(&mut oracle, perm, gamma, &mut NoObserver)?;
        walk(problem, perms, gamma, remaining - 1, next, out)?;
    }
    Ok(())
}
