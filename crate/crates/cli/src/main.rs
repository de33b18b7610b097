// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermocorr_cli::{run_corrections, run_evolve, run_steadystate, run_validate, CliError, RunConfig, RunOptions, Task};

#[derive(Parser)]
#[command(name = "thermocorr", version, about = "Second-order Hamiltonian corrections for open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correction coefficients (a swept table for a two-level system).
    Corrections(Common),
    /// Density-matrix trajectories.
    Evolve(Common),
    /// Stationary states.
    Steadystate(Common),
    /// Run the self-check suite; exits non-zero on any failure.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the configuration's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Skip the exact-bath oracle checks.
    #[arg(long)]
    skip_oracle: bool,
}

fn run(task: Task, c: Common) -> Result<bool, CliError> {
    let config = RunConfig::from_path(&c.config)?;
    if config.task != task {
        return Err(CliError::Config(format!(
            "task: configuration requests {:?} but the subcommand is {task:?}",
            config.task
        )));
    }
    let opts = RunOptions {
        out: c.out,
        tol_abs: c.tol_abs,
        tol_rel: c.tol_rel,
        threads: c.threads,
        skip_oracle: c.skip_oracle,
    };
    match task {
        Task::Corrections => run_corrections(&config, &opts).map(|_| true),
        Task::Evolve => run_evolve(&config, &opts).map(|_| true),
        Task::Steadystate => run_steadystate(&config, &opts).map(|_| true),
        Task::Validate => run_validate(&config, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match cli.command {
        Command::Corrections(c) => (Task::Corrections, c),
        Command::Evolve(c) => (Task::Evolve, c),
        Command::Steadystate(c) => (Task::Steadystate, c),
        Command::Validate(c) => (Task::Validate, c),
    };
    match run(task, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
