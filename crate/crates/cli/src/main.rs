//! overlap-lab: Monte Carlo and analytic eigenvector-overlap statistics of
//! non-Hermitian random matrices.

mod analytic;
mod common;
mod compare;
mod estimate;
mod predict;
mod qsolve;
mod sample;

use clap::{Parser, Subcommand};
use common::CliError;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "overlap-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sample matrices and write eigenvalues and overlaps
    Sample(sample::SampleArgs),
    /// Monte Carlo estimates from a sample directory
    #[command(subcommand)]
    Estimate(estimate::EstimateCmd),
    /// Closed-form large-N and finite-N formulas
    #[command(subcommand)]
    Analytic(analytic::AnalyticCmd),
    /// Quaternionic Green's function solver
    #[command(subcommand)]
    Qsolve(qsolve::QsolveCmd),
    /// Compare an estimate table with a prediction or another table
    Compare(compare::CompareArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("OVERLAP_LAB_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| common::err(format!("OVERLAP_LAB_THREADS={v:?} is not a number")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(common::err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = configure_threads().and_then(|_| match &cli.cmd {
        Cmd::Sample(a) => sample::run(a),
        Cmd::Estimate(c) => estimate::run(c),
        Cmd::Analytic(c) => analytic::run(c),
        Cmd::Qsolve(c) => qsolve::run(c),
        Cmd::Compare(a) => compare::run(a),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Tolerance(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
