//! Command-line front end.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::Error;
use crate::experiment::{
    run_decode, run_eval, run_grid, run_synth, run_train, run_verify, write_json,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "selfrank",
    version,
    about = "Low-rank structured prediction and label ranking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set train.lambda=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train on one split; writes checkpoint.json and objective_trace.json.
    Train,
    /// Score a checkpoint on the test split; writes eval_report.json.
    Eval,
    /// Grid search with re-split trials; writes grid.json.
    Grid,
    /// Predicted orderings per user; writes orderings.json.
    Decode,
    /// Trace-norm vs closed-form comparison on synthetic data; writes synth.json.
    Synth,
    /// Oracle property suite; writes verify.json.
    Verify,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::Parse { .. }
        | Error::Duplicate { .. }
        | Error::Io { .. }
        | Error::Json(_) => EXIT_CONFIG,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Numerical(_) | Error::Capacity(_) => EXIT_FAILURE,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let mut cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn checkpoint_for(cfg: &RunConfig) -> Result<Checkpoint, Error> {
    let path = cfg
        .eval
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.out.join("checkpoint.json"));
    if !path.exists() {
        return Err(Error::Config(format!(
            "checkpoint {} not found; run `train` first or set eval.checkpoint",
            path.display()
        )));
    }
    Checkpoint::load(path)
}

/// Runs one command and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let result = load_config(cli).and_then(|cfg| {
        let out = cfg.out.clone();
        match cli.command {
            Command::Train => {
                let (ck, trace) = run_train(&cfg)?;
                write_json(&out.join("checkpoint.json"), &ck)?;
                write_json(&out.join("objective_trace.json"), &trace)?;
                println!(
                    "trained {} ({} iterations)",
                    ck.learner.name(),
                    ck.iters_run
                );
            }
            Command::Eval => {
                let report = run_eval(&cfg, &checkpoint_for(&cfg)?)?;
                write_json(&out.join("eval_report.json"), &report)?;
                println!(
                    "mean {:.6} over {} queries ({} skipped)",
                    report.mean, report.n_queries, report.skipped
                );
            }
            Command::Grid => {
                let art = run_grid(&cfg, cfg.train.learner)?;
                write_json(&out.join("grid.json"), &art)?;
                println!(
                    "{}: mean {:.6} std {:.6} over {} trials",
                    art.learner.name(),
                    art.report.mean,
                    art.report.std,
                    art.report.trials
                );
            }
            Command::Decode => {
                let art = run_decode(&cfg, &checkpoint_for(&cfg)?)?;
                write_json(&out.join("orderings.json"), &art)?;
                println!("wrote {} orderings", art.orderings.len());
            }
            Command::Synth => {
                let art = run_synth(&cfg)?;
                write_json(&out.join("synth.json"), &art)?;
                println!(
                    "trace norm wins {}/{} (mean risk {:.6} vs {:.6})",
                    art.trace_norm_wins,
                    art.comparisons.len(),
                    art.trace_norm_mean_risk,
                    art.hs_mean_risk
                );
            }
            Command::Verify => {
                let art = run_verify(&cfg);
                write_json(&out.join("verify.json"), &art)?;
                for c in &art.report.checks {
                    println!(
                        "{} {:<24} residual {:.3e} (threshold {:.1e})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.residual,
                        c.threshold
                    );
                }
                if !art.report.passed {
                    return Ok(EXIT_VERIFY);
                }
            }
        }
        Ok(EXIT_OK)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
