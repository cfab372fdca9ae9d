//! Batch front end behind the `ma` binary.
//!
//! Commands read a flat `key = value` config (see [`RunConfig`]), run one
//! solver or analysis, and write grids, JSON reports and CSV tables into the
//! output directory. Exit codes: 0 ok, 1 usage or parse error, 2 infeasible,
//! 3 non-convergence, 4 invariant gate failure.

mod commands;
mod config;
mod inputs;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_analyze, cmd_solve_dirichlet, cmd_solve_periodic, cmd_verify, output_path, OutputFile, RunHeader,
};
pub use config::{sha256_hex, RunConfig};
pub use inputs::{Call, InputFile};

use crate::error::Result;
use crate::verify::exit_code;

#[derive(Debug, Parser)]
#[command(name = "ma", version, about = "Monge-Ampère solvers and structure diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 keeps the default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the periodic cell problem.
    SolvePeriodic(CommonArgs),
    /// Solve a Dirichlet problem on a convex domain.
    SolveDirichlet(CommonArgs),
    /// Structure analysis of an entire-solution sample.
    Analyze(CommonArgs),
    /// Run the acceptance suite.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Run only these criteria (repeatable).
        #[arg(long = "criterion")]
        criteria: Vec<usize>,
    },
}

/// Effective config: the file, then flag overrides.
pub fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::empty(),
    };
    if let Some(out) = &common.out {
        cfg.set("out", out.to_string_lossy())?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", seed.to_string())?;
    }
    Ok(cfg)
}

fn dispatch(command: &Command) -> Result<i32> {
    let common = match command {
        Command::SolvePeriodic(c) | Command::SolveDirichlet(c) | Command::Analyze(c) => c,
        Command::Verify { common, .. } => common,
    };
    let mut cfg = load_config(common)?;
    let threads = if common.threads > 0 { common.threads } else { cfg.get("threads", 0)? };
    if threads > 0 {
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match command {
        Command::SolvePeriodic(_) => cmd_solve_periodic(&cfg),
        Command::SolveDirichlet(_) => cmd_solve_dirichlet(&cfg),
        Command::Analyze(_) => cmd_analyze(&cfg),
        Command::Verify { criteria, .. } => {
            if !criteria.is_empty() {
                let list: Vec<String> = criteria.iter().map(|c| c.to_string()).collect();
                cfg.set("criteria", list.join(","))?;
            }
            cmd_verify(&cfg)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Sets up `MA_LOG`-controlled logging (`error`, `info` or `debug`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("MA_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
