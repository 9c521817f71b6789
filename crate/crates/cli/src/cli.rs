//! Argument parsing and command dispatch.

use crate::commands::{
    bench::cmd_bench, eval::cmd_eval, infer::cmd_infer, oracle::cmd_oracle, traces::cmd_traces,
    train::cmd_train,
};
use crate::config::{ExperimentConfig, Precision};
use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use vransim_core::scalar::Real;

#[derive(Parser, Debug)]
#[command(
    name = "vransim",
    version,
    about = "Shared-CPU vRAN platform simulator with a learning core orchestrator"
)]
pub struct Cli {
    /// TOML experiment config; built-in defaults apply when omitted.
    #[arg(short, long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override the run seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Override the output directory from the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Train the agent from scratch and write a checkpoint.
    Train,
    /// Evaluate a trained checkpoint on random episodes or on trace replay.
    Eval,
    /// Compare the trained agent against SIRA, oracle, and all-on baselines.
    Bench,
    /// Generate the synthetic multi-day slice traces.
    Traces,
    /// Dump oracle decisions, with the full placement lattice on small hosts.
    Oracle,
    /// Measure greedy decision latency per vBS count.
    InferenceBench,
}

/// Exit code 2 marks configuration problems, 3 runtime failures.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("vransim: config error: {e:#}");
            return 2;
        }
    };
    match dispatch(cli.command, &cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vransim: error: {e:#}");
            3
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::from_toml_str("")?,
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.run.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig) -> Result<()> {
    match cfg.run.precision {
        Precision::F32 => go::<f32>(cmd, cfg),
        Precision::F64 => go::<f64>(cmd, cfg),
    }
}

fn go<F: Real>(cmd: Command, cfg: &ExperimentConfig) -> Result<()> {
    match cmd {
        Command::Train => cmd_train::<F>(cfg),
        Command::Eval => cmd_eval::<F>(cfg),
        Command::Bench => cmd_bench::<F>(cfg),
        Command::Traces => cmd_traces::<F>(cfg),
        Command::Oracle => cmd_oracle::<F>(cfg),
        Command::InferenceBench => cmd_infer::<F>(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn args_parse_and_overrides_apply() {
        let cli = Cli::try_parse_from(["vransim", "train", "--seed", "42", "--out-dir", "/tmp/x"])
            .unwrap();
        assert_eq!(cli.command, Command::Train);
        let cfg = load_config(&cli).unwrap();
        assert_eq!(cfg.run.seed, 42);
        assert_eq!(cfg.run.out_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let cli = Cli::try_parse_from(["vransim", "-c", "/nonexistent/zz.toml", "train"]).unwrap();
        assert!(load_config(&cli).is_err());
        assert_eq!(run(&cli), 2);
    }

    #[test]
    fn subcommand_is_required() {
        assert!(Cli::try_parse_from(["vransim"]).is_err());
    }
}
