//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nofullgrad::data::{make_binary_classification, make_quadratic_suite, parse_libsvm, parse_libsvm_bytes, write_libsvm, LabeledDataset, SparseRow};
use nofullgrad::experiment::{checks, emit_csv, run_experiment, GammaSpec, ProblemSpec, RunConfig, RunStatus};
use nofullgrad::optimizers::{lyapunov_value, theoretical_stepsize, NfgSarah, NfgSvrg, NoObserver, Optimizer};
use nofullgrad::oracle::objective;
use nofullgrad::{DynOracle, FiniteSumProblem, Method, ParamVector, ShuffleKind, ShuffleStrategy, StepsizePolicy};

/// Criterion 5: slack on the rate bound.
const RATE_SLACK: f64 = 1.01;
/// Criterion 6: running mean at S = 200 must fall below this multiple of its S = 20 value.
const NONCONVEX_FACTOR: f64 = 10.0;
/// Criterion 11: a variance-reduced method without full gradients "matches" its
/// full-gradient counterpart when its final suboptimality is within this
/// relative margin at equal oracle budget.
const MATCH_REL_TOL: f64 = 0.05;
/// Criterion 11: rows kept from the dataset.
const SUBSAMPLE_ROWS: usize = 2000;
/// Criterion 11: budget in full-gradient equivalents (n component units each).
const BUDGET_PASSES: usize = 60;

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("epoch-average identity", c1_epoch_average),
        ("telescoping identity", c2_telescoping),
        ("oracle accounting", c3_accounting),
        ("memory footprint", c4_memory),
        ("linear rate, strongly convex", c5_linear_rate),
        ("non-convex running mean", c6_nonconvex),
        ("zero-chain properties", c7_zero_chain),
        ("gradient correctness", c8_gradients),
        ("determinism", c9_determinism),
        ("LIBSVM parser", c10_parser),
        ("tuned vs theoretical stepsizes on a9a-like data", c11_tuned_ordering),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        let (passed, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => v,
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !passed {
            failures += 1;
        }
        println!("{} criterion {:>2} ({name}): {detail}", if passed { "PASS" } else { "FAIL" }, k + 1);
    }
    println!("{} criteria, {} failed", 11, failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn from_check(r: nofullgrad::Result<checks::CheckOutcome>) -> Verdict {
    match r {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    }
}

fn c1_epoch_average() -> Verdict {
    from_check(checks::epoch_average_identity(&[2, 17, 256], 8, 3))
}

fn c2_telescoping() -> Verdict {
    from_check(checks::telescoping_identity(&[2, 17, 256], 8, 3))
}

fn c3_accounting() -> Verdict {
    from_check(checks::oracle_accounting(&[1, 7, 100]))
}

fn c4_memory() -> Verdict {
    from_check(checks::memory_footprint(&[10, 10_000]))
}

/// Lyapunov values Delta_1..=Delta_S for one method.
fn lyapunov_sequence(method: Method, condition: f64, epochs: usize) -> (Vec<f64>, f64) {
    let n = 50;
    let problem = make_quadratic_suite(n, 10, condition, 1.0, 41).unwrap();
    let f_star = problem.optimal_value().unwrap();
    let (policy, steps) = match method {
        Method::NfgSvrg => (StepsizePolicy::TheoreticalNfgSvrg, n),
        Method::NfgSarah => (StepsizePolicy::TheoreticalNfgSarah, n + 1),
        other => panic!("no Lyapunov analysis for {other}"),
    };
    let gamma = theoretical_stepsize(&policy, condition, n).unwrap();
    let mu = 1.0;
    let q = gamma * mu * steps as f64 / 2.0;
    let x0 = ParamVector::zeros(10);
    let mut svrg = NfgSvrg::new(x0.clone());
    let mut sarah = NfgSarah::new(x0);
    let strategy = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 5);
    let mut oracle = DynOracle::erased(&problem);
    let mut deltas = Vec::new();
    for s in 0..=epochs {
        let perm = strategy.permutation_for_epoch(s as u64, n).unwrap();
        let (estimate_sq, x) = if method == Method::NfgSvrg {
            let v = svrg.estimate().norm_sq();
            svrg.run_epoch(&mut oracle, &perm, gamma, &mut NoObserver).unwrap();
            (v, svrg.iterate().to_vec())
        } else {
            let v = sarah.estimate().norm_sq();
            sarah.run_epoch(&mut oracle, &perm, gamma, &mut NoObserver).unwrap();
            (v, sarah.iterate().to_vec())
        };
        if s >= 1 {
            let gap = objective(&problem, &x).unwrap() - f_star;
            deltas.push(lyapunov_value(gap, gamma, steps, estimate_sq));
        }
    }
    (deltas, q)
}

fn c5_linear_rate() -> Verdict {
    let epochs = 100;
    let mut ok = true;
    let mut details = Vec::new();
    for method in [Method::NfgSvrg, Method::NfgSarah] {
        for condition in [1.0, 10.0] {
            let (deltas, q) = lyapunov_sequence(method, condition, epochs);
            let monotone = deltas.windows(2).all(|w| w[1] <= w[0]);
            let first = deltas[0];
            let last = *deltas.last().unwrap();
            let bound = RATE_SLACK * (1.0 - q).powi(epochs as i32) * first;
            ok &= monotone && last <= bound;
            details.push(format!(
                "{method} L/mu={condition}: monotone={monotone}, Delta_S/Delta_1={:.3e} vs bound {:.3e}",
                last / first,
                bound / first
            ));
        }
    }
    (ok, details.join("; "))
}

fn c6_nonconvex() -> Verdict {
    let mut config = RunConfig::new(ProblemSpec::Sigmoid { n: 200, dim: 20, seed: 6 }, Method::NfgSvrg, GammaSpec::Theory, 200);
    config.shuffle = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 6);
    let out = run_experiment(&config).unwrap();
    if out.records.len() != 200 {
        return (false, format!("run stopped after {} epochs ({:?})", out.records.len(), out.summary.status));
    }
    let at20 = out.records[19].running_mean_grad_sq;
    let at200 = out.records[199].running_mean_grad_sq;
    (
        at200 < NONCONVEX_FACTOR * at20,
        format!("running mean {at20:.4e} at S=20, {at200:.4e} at S=200 (ratio {:.3})", at200 / at20),
    )
}

fn c7_zero_chain() -> Verdict {
    from_check(checks::zero_chain_properties(1000, 20))
}

fn c8_gradients() -> Verdict {
    from_check(checks::gradient_correctness(100))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_nofullgrad")
}

fn c9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "[problem]\nkind = quadratic\nn = 40\ndim = 6\nsmoothness = 5\nmu = 1\nseed = 9\n\
         [optimizer]\nmethod = nfg-sarah\ngamma = theory\n[shuffle]\nstrategy = rr\nseed = 123\n[run]\nepochs = 60\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let status = Command::new(binary()).arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
        if !status.status.success() {
            return (false, format!("run {k} exited with {:?}", status.status.code()));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let cli_same = outputs[0] == outputs[1];

    // every method, in process
    let mut lib_same = true;
    for method in Method::ALL {
        let mut c = RunConfig::new(ProblemSpec::Quadratic { n: 30, dim: 4, smoothness: 3.0, mu: 1.0, seed: 2 }, method, GammaSpec::Theory, 25);
        c.shuffle = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 77);
        let a = emit_csv(&run_experiment(&c).unwrap().records).unwrap();
        let b = emit_csv(&run_experiment(&c).unwrap().records).unwrap();
        lib_same &= a == b;
    }
    (
        cli_same && lib_same,
        format!("CLI CSV byte-identical: {cli_same} ({} bytes); all 7 methods in-process: {lib_same}", outputs[0].len()),
    )
}

fn random_dataset(rng: &mut ChaCha8Rng) -> LabeledDataset {
    let rows = rng.random_range(1..30);
    let mut data_rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..rows {
        let mut indices = Vec::new();
        let mut j = 0usize;
        while indices.len() < 12 {
            j += rng.random_range(1..8);
            if rng.random_bool(0.15) {
                break;
            }
            indices.push(j - 1);
        }
        let values = indices
            .iter()
            .map(|_| {
                let mantissa: f64 = rng.random_range(-1.0..1.0);
                mantissa * 10f64.powi(rng.random_range(-20..20))
            })
            .collect();
        data_rows.push(SparseRow::new(indices, values).unwrap());
        labels.push(match rng.random_range(0..3) {
            0 => 1.0,
            1 => -1.0,
            _ => rng.random_range(0.0..1.0),
        });
    }
    LabeledDataset::new(data_rows, labels).unwrap()
}

fn c10_parser() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut round_trips = 0;
    for _ in 0..100 {
        let d = random_dataset(&mut rng);
        if parse_libsvm(&write_libsvm(&d)).ok().as_ref() == Some(&d) {
            round_trips += 1;
        }
    }

    let malformed: [(&str, usize, usize); 10] = [
        ("1 0:1.0\n", 1, 3),
        ("1 3:1 2:1\n", 1, 7),
        ("1 1:abc\n", 1, 5),
        ("abc 1:1\n", 1, 1),
        ("1 1:1 x\n", 1, 7),
        ("1 :5\n", 1, 3),
        ("1 1:\n", 1, 5),
        ("1 1:nan\n", 1, 5),
        ("\n1 1:1\n1 2:1 2:3\n", 3, 7),
        ("+1  -1:2\n", 1, 5),
    ];
    let mut located = 0;
    let mut misses = Vec::new();
    for (text, line, column) in malformed {
        match parse_libsvm(text) {
            Err(e) if e.line == line && e.column == column => located += 1,
            other => misses.push(format!("{text:?} -> {other:?}")),
        }
    }

    let seeds = [b"1 1:0.5 3:-2\n".to_vec(), b"-1 2:1e-3 10:4 # c\n+1 7:1\n".to_vec()];
    let mut crashes = 0;
    for k in 0..10_000 {
        let input: Vec<u8> = if k % 2 == 0 {
            let len = rng.random_range(0..64);
            (0..len).map(|_| rng.random::<u8>()).collect()
        } else {
            let mut s = seeds[k % seeds.len()].clone();
            for _ in 0..rng.random_range(1..6) {
                let pos = rng.random_range(0..s.len());
                let byte = *b" :#\n0123456789.-+eE".get(rng.random_range(0..19)).unwrap();
                if rng.random_bool(0.5) {
                    s[pos] = byte;
                } else {
                    s.insert(pos, byte);
                }
            }
            s
        };
        let ok = catch_unwind(|| match parse_libsvm_bytes(&input) {
            Ok(d) => !d.is_empty(),
            Err(e) => e.line >= 1 && e.column >= 1,
        });
        if !matches!(ok, Ok(true)) {
            crashes += 1;
        }
    }
    (
        round_trips == 100 && located == 10 && crashes == 0,
        format!(
            "round-trips {round_trips}/100, located errors {located}/10, fuzz failures {crashes}/10000{}",
            if misses.is_empty() { String::new() } else { format!(" [{}]", misses.join(", ")) }
        ),
    )
}

/// The real a9a file when present, otherwise a synthetic file of the same shape.
fn a9a_source(dir: &Path) -> (PathBuf, &'static str) {
    let candidates = [std::env::var("A9A_PATH").ok().map(PathBuf::from), Some(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/a9a")))];
    if let Some(p) = candidates.into_iter().flatten().find(|p| p.is_file()) {
        let copy = dir.join("a9a");
        std::fs::copy(&p, &copy).unwrap();
        return (copy, "a9a");
    }
    let data = make_binary_classification(SUBSAMPLE_ROWS, 123, 0.11, 2024).unwrap();
    let path = dir.join("a9a-synthetic.txt");
    std::fs::write(&path, write_libsvm(&data)).unwrap();
    (path, "synthetic a9a stand-in")
}

fn c11_tuned_ordering() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (path, source) = a9a_source(dir.path());
    let spec = ProblemSpec::Libsvm { path, rows: Some(SUBSAMPLE_ROWS), scaling: Default::default() };
    let run = |method: Method, gamma: GammaSpec| {
        let epochs = BUDGET_PASSES / method.units_per_epoch(1) as usize;
        let mut c = RunConfig::new(spec.clone(), method, gamma, epochs);
        c.shuffle = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 11);
        let out = run_experiment(&c).unwrap();
        assert_ne!(out.summary.status, RunStatus::Diverged, "{method} diverged");
        out
    };
    let theory = run(Method::NfgSvrg, GammaSpec::Theory);
    let tuned = run(Method::NfgSvrg, GammaSpec::Grid);
    let svrg = run(Method::Svrg, GammaSpec::Grid);
    let sarah = run(Method::Sarah, GammaSpec::Grid);
    let nfg_sarah = run(Method::NfgSarah, GammaSpec::Grid);
    let gap = |o: &nofullgrad::experiment::RunOutcome| o.summary.final_gap.unwrap();
    let same_budget = [&theory, &tuned, &svrg, &sarah, &nfg_sarah].iter().all(|o| o.summary.oracle_units == theory.summary.oracle_units);
    let tuned_wins = tuned.summary.final_loss.unwrap() < theory.summary.final_loss.unwrap();
    let svrg_ok = gap(&tuned) <= (1.0 + MATCH_REL_TOL) * gap(&svrg);
    let sarah_ok = gap(&nfg_sarah) <= (1.0 + MATCH_REL_TOL) * gap(&sarah);
    (
        same_budget && tuned_wins && svrg_ok && sarah_ok,
        format!(
            "{source}, {} units each: f-f* theory NFG-SVRG {:.3e} (gamma {:.2e}), tuned NFG-SVRG {:.3e} (gamma {:.2e}), tuned SVRG {:.3e}, tuned NFG-SARAH {:.3e}, tuned SARAH {:.3e}",
            theory.summary.oracle_units,
            gap(&theory),
            theory.summary.gamma,
            gap(&tuned),
            tuned.summary.gamma,
            gap(&svrg),
            gap(&nfg_sarah),
            gap(&sarah)
        ),
    )
}
