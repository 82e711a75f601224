use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twomode_cli::commands::{execute, Command, Invocation};
use twomode_cli::{Format, RunConfig};

/// Exact and numerical solutions of a solvable two-variable ODE system.
#[derive(Debug, Parser)]
#[command(name = "twomode", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Closed-form coefficients and trajectory.
    SolveExact(Common),
    /// Numerical trajectory from the adaptive integrator.
    Integrate(Common),
    /// Run every applicable check and write report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Scale gamma[0][0] by this factor before checking (negative control).
        #[arg(long, hide = true)]
        corrupt_gamma: Option<f64>,
    },
    /// Seeded ensemble over parameter boxes, one CSV row per draw.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `output.dir`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, corrupt_gamma) = match cli.command {
        Cmd::SolveExact(c) => (Command::SolveExact, c, None),
        Cmd::Integrate(c) => (Command::Integrate, c, None),
        Cmd::Verify { common, corrupt_gamma } => (Command::Verify, common, corrupt_gamma),
        Cmd::Sweep(c) => (Command::Sweep, c, None),
    };
    let config = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut inv = Invocation::new(config, common.out, common.format, common.seed);
    inv.corrupt_gamma = corrupt_gamma;
    ExitCode::from(execute(command, &inv) as u8)
}
