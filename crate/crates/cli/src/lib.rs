//! Command-line front end: configuration parsing, the subcommands and their artifacts.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Failure, EXIT_CONFIG};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "inlslab", version, about = "Ground states, evolution and classification for the inhomogeneous quadratic NLS system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized initial guesses; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and the linear solves (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Compute the ground state and its summary.
    GroundState,
    /// Evolve initial data and report blow-up or scattering diagnostics.
    Evolve,
    /// Classify a state against a ground state.
    Classify,
    /// Run an alpha or amplitude sweep.
    Sweep,
    /// Compute the sharp Gagliardo-Nirenberg constant.
    GnConstant,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, env: &[(String, String)]) -> i32 {
    match execute(cli, env) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, env: &[(String, String)]) -> Result<i32, Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure { code: EXIT_CONFIG, message: "--workers: must be at least 1".into() });
        }
        // The global pool can only be set once per process; later calls keep the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure { code: EXIT_CONFIG, message: "--config: a configuration file is required".into() })?;
    let mut cfg = RunConfig::load(path, env)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    } else {
        cfg.output.dir = cfg.resolve(&cfg.output.dir);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::GroundState => commands::ground_state(&cfg),
        Command::Evolve => commands::evolve_cmd(&cfg),
        Command::Classify => commands::classify_cmd(&cfg),
        Command::Sweep => commands::sweep_cmd(&cfg),
        Command::GnConstant => commands::gn_constant_cmd(&cfg),
    }
}
