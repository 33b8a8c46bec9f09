use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nofullgrad::experiment::{checks, emit_csv, run_experiment, write_outputs, GammaSpec, RunConfig};
use nofullgrad::{Error, Method, ShuffleKind};

/// Variance-reduced shuffling methods without full gradients.
#[derive(Parser)]
#[command(name = "nofullgrad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment and write per-epoch CSV plus a JSON summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        /// A number, `theory` or `grid`.
        #[arg(long)]
        gamma: Option<GammaSpec>,
        /// rr, so or cyclic.
        #[arg(long)]
        shuffle: Option<ShuffleKind>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// CSV destination; the summary goes to `<out>.summary.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override any config key, e.g. `--set problem.n=200`. Repeatable.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the invariant suite and print one line per check.
    IdentityCheck,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Io { .. } | Error::Contract(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, method, gamma, shuffle, seed, epochs, out, set } => {
            let mut cfg = match RunConfig::from_file_with_overrides(&config, &set) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(m) = method {
                cfg.method = m;
            }
            if let Some(g) = gamma {
                cfg.gamma = g;
            }
            if let Some(k) = shuffle {
                cfg.shuffle.kind = k;
            }
            if let Some(s) = seed {
                cfg.shuffle.seed = s;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if out.is_some() {
                cfg.out = out;
            }
            run(&cfg)
        }
        Command::Validate { config, set } => match RunConfig::from_file_with_overrides(&config, &set) {
            Ok(cfg) => {
                println!(
                    "ok: {} problem, {} with gamma {}, {} shuffle (seed {}), {} epochs",
                    cfg.problem.kind(),
                    cfg.method,
                    cfg.gamma,
                    cfg.shuffle.kind,
                    cfg.shuffle.seed,
                    cfg.epochs
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::IdentityCheck => match checks::run_identity_suite() {
            Ok(outcomes) => {
                let mut all = true;
                for o in &outcomes {
                    println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                    all &= o.passed;
                }
                if all {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_FAILURE)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_FAILURE)
            }
        },
    }
}

fn run(cfg: &RunConfig) -> ExitCode {
    if let Err(e) = cfg.validate() {
        return fail(&e);
    }
    let outcome = match run_experiment(cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    match &cfg.out {
        Some(path) => {
            if let Err(e) = write_outputs(&outcome, path) {
                return fail(&e);
            }
            println!("{summary}");
        }
        None => {
            if !outcome.records.is_empty() {
                print!("{}", emit_csv(&outcome.records).expect("records are non-empty"));
            }
            eprintln!("{summary}");
        }
    }
    if outcome.summary.status.is_failure() {
        if let Some(err) = &outcome.summary.error {
            eprintln!("run failed: {err}");
        }
        ExitCode::from(EXIT_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(usage_code(e))
}
