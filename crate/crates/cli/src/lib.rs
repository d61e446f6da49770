//! Command-line front end: argument parsing, figure pipelines and file emitters.

pub mod args;
pub mod commands;
pub mod emit;
pub mod error;
pub mod manifest;
pub mod reproduce;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

/// Caps the global worker pool from `MODWAVE_THREADS`.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("MODWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("MODWAVE_THREADS must be a positive integer, got '{raw}'")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli, argv: &[String]) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::MathieuChart(a) => commands::mathieu_chart(a, argv),
        Command::Monodromy(a) => commands::monodromy(a, argv),
        Command::Dispersion(a) => commands::dispersion(a, argv),
        Command::Simulate(a) => commands::simulate(a, argv),
        Command::Continuum(a) => commands::continuum(a, argv),
        Command::Reproduce(a) => reproduce::reproduce(a, argv),
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
