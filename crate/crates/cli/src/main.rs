//! `fecvx`: FE-convex approximation runs, SDP export and checks.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::RunArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] fecvx::Error),
    #[error("{0}")]
    Sdp(#[from] fecvx_sdp::SdpError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("output directory {0} is locked by another run (remove the lock file if stale)")]
    Locked(PathBuf),
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Parser)]
#[command(name = "fecvx", version, about = "Minimize functionals over FE-convex functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a benchmark problem on a sequence of meshes.
    Run(RunArgs),
    /// `run --mode adaptive`.
    Adapt(RunArgs),
    /// Check whether stored coefficients are FE-convex.
    CheckConvexity(commands::CheckArgs),
    /// Solve an SDPA sparse (`.dat-s`) file.
    Solve(commands::SolveArgs),
    /// Write the SDP of the initial mesh in SDPA sparse format.
    ExportSdp {
        #[command(flatten)]
        run: RunArgs,
        /// Target file; defaults to `<out>/model.dat-s`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(&a, None),
        Command::Adapt(a) => commands::run(&a, Some(config::Mode::Adaptive)),
        Command::CheckConvexity(a) => commands::check_convexity(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::ExportSdp { run, output } => commands::export_sdp(&run, output),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
