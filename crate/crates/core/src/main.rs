// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eeqt::run::{run, Command, GridSpec, Method, RunError, RunManifest, EXIT_VALIDATION};

#[derive(Parser)]
#[command(
    name = "eeqt",
    version,
    about = "Exact and stochastic open-quantum-system dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Check a model file.
    Validate {
        /// Model file (alternative to --model).
        path: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Propagate a state exactly and write the densities as CSV.
    Exact(Opts),
    /// Run a trajectory ensemble and write the mean densities as CSV.
    Simulate(Opts),
    /// Run the randomized identity checks and write a JSON report.
    Verify(Opts),
    /// Simulate and compare against exact propagation.
    Compare(Opts),
}

#[derive(Args, Default)]
struct Opts {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    state: Option<PathBuf>,
    /// Model used for the exact reference in `compare` (defaults to --model).
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// pdp | qsd | mcwf
    #[arg(long)]
    method: Option<String>,
    /// Defaults to the last --grid time, or 1 for a point count.
    #[arg(long)]
    horizon: Option<f64>,
    /// Point count N or a comma-separated list of times.
    #[arg(long, default_value = "9")]
    grid: String,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
}

fn manifest(
    command: Command,
    opts: Opts,
    positional: Option<PathBuf>,
) -> eeqt::Result<RunManifest> {
    let mut m = RunManifest::new(command);
    m.model_path = opts.model.or(positional);
    m.state_path = opts.state;
    m.oracle_path = opts.oracle;
    m.method = opts
        .method
        .as_deref()
        .map(str::parse::<Method>)
        .transpose()?;
    m.grid = opts.grid.parse::<GridSpec>()?;
    m.horizon = opts.horizon.unwrap_or_else(|| m.grid.default_horizon());
    m.dt = opts.dt;
    m.n_trajectories = opts.n;
    m.seed = opts.seed;
    m.workers = opts.workers;
    m.out = opts.out;
    m.events = opts.events;
    Ok(m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let built = match cli.command {
        Sub::Validate { path, opts } => manifest(Command::Validate, opts, path),
        Sub::Exact(o) => manifest(Command::Exact, o, None),
        Sub::Simulate(o) => manifest(Command::Simulate, o, None),
        Sub::Verify(o) => manifest(Command::Verify, o, None),
        Sub::Compare(o) => manifest(Command::Compare, o, None),
    };
    let result = built.map_err(RunError::from).and_then(|m| run(&m));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code.clamp(EXIT_VALIDATION, 255) as u8)
        }
    }
}
