//! `cfo`: solve, tabulate and simulate with the conservative flux
//! optimization finite element method.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cfo", version, about = "Conservative flux optimization finite elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one test case on one mesh and write the fields and error report.
    Solve(SolveArgs),
    /// Convergence tables over a halving sequence of meshes.
    Converge(ConvergeArgs),
    /// Per-element multiplier and error fields with their correlation.
    Estimator(SolveArgs),
    /// Two-phase displacement by operator splitting.
    Twophase(TwophaseArgs),
    /// Unknowns per triangle for CFO, Raviart-Thomas and BDM.
    Dofs(DofsArgs),
}

/// Flags shared by every command that writes files.
#[derive(Args, Debug)]
pub struct Common {
    /// key=value settings file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run element loops on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    /// Test case 1-4.
    #[arg(long)]
    pub case: Option<usize>,
    /// Domain for case 2: full or shifted.
    #[arg(long)]
    pub domain: Option<String>,
    /// Polynomial degree 1-3.
    #[arg(long)]
    pub k: Option<usize>,
    /// Element size in the stabilization weight: spacing or diameter.
    #[arg(long)]
    pub element_size: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Stabilization exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Subdivisions per side.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated stabilization exponents; one table each.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_negative_numbers = true)]
    pub beta: Option<Vec<f64>>,
    /// Comma-separated subdivisions per side, each double the last.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub sizes: Option<Vec<usize>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TwophaseArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub end_time: Option<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long)]
    pub mu_w: Option<f64>,
    #[arg(long)]
    pub mu_o: Option<f64>,
    /// Permeability source: synthetic, uniform or file.
    #[arg(long)]
    pub perm: Option<String>,
    /// Permeability for `--perm uniform`.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Field file for `--perm file`.
    #[arg(long)]
    pub perm_file: Option<PathBuf>,
    /// Seed of the synthetic field.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mean of log-permeability.
    #[arg(long, allow_negative_numbers = true)]
    pub mean: Option<f64>,
    /// Variance of log-permeability.
    #[arg(long)]
    pub variance: Option<f64>,
    #[arg(long)]
    pub correlation_length: Option<f64>,
    /// Cells per side of the synthetic field.
    #[arg(long)]
    pub field_n: Option<usize>,
    /// Transport steps per pressure solve.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub max_dt: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DofsArgs {
    /// Comma-separated degrees.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "1,2,3")]
    pub k: Vec<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Converge(a) => commands::converge(a),
        Command::Estimator(a) => commands::estimator(a),
        Command::Twophase(a) => commands::twophase(a),
        Command::Dofs(a) => commands::dofs(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
