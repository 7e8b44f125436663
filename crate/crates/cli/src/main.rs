use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

mod commands;
mod files;

#[derive(Parser)]
#[command(name = "cbr", version, about = "Case-based reasoning engine and goal-driven autonomy simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Engine config file (sectioned key = value; see the defaults below).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for sampled inputs; overrides `[engine] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a library from case record files.
    Ingest(commands::IngestArgs),
    /// Rank library cases against a query.
    Retrieve(commands::RetrieveArgs),
    /// Retrieve, adapt and explain a solution for a query.
    Solve(commands::SolveArgs),
    /// Add a case to a library if its utility reaches the retention threshold.
    Retain(commands::RetainArgs),
    /// Run goal-driven episodes on a scenario, learning between episodes.
    Simulate(commands::SimulateArgs),
    /// Report probes the library covers poorly, plus cluster densities.
    Gaps(commands::GapsArgs),
    /// Compute explainability, adaptation rate, cost and quality from a sheet.
    Metrics(commands::MetricsArgs),
    /// Show the provenance of an adapted solution and check that it replays.
    Explain(commands::SolveArgs),
}

/// Exit status for a failed command, keyed on the underlying engine error.
fn exit_code(err: &anyhow::Error) -> u8 {
    use cbr_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Parse { .. }
                | E::MalformedRecord(_)
                | E::DuplicateFeature(_)
                | E::EmptySolution
                | E::EmptyProblem
                | E::InvalidConfig(_)
                | E::DigestMismatch { .. } => 3,
                E::NothingRetrieved => 4,
                E::EnvironmentHalted(_) => 5,
                _ => 1,
            };
        }
        if cause.downcast_ref::<commands::Rejected>().is_some() {
            return 3;
        }
    }
    1
}

/// Output closed early by the reader, as with `cbr gaps ... | head`.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().filter_map(|c| c.downcast_ref::<std::io::Error>()).any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let defaults = format!("Configuration defaults:\n\n{}", cbr_core::config::EngineConfig::default().render());
    let matches = Cli::command().after_long_help(defaults).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&cli.global, &a, &mut out),
        Command::Retrieve(a) => commands::retrieve(&cli.global, &a, &mut out),
        Command::Solve(a) => commands::solve(&cli.global, &a, &mut out),
        Command::Retain(a) => commands::retain(&cli.global, &a, &mut out),
        Command::Simulate(a) => commands::simulate(&cli.global, &a, &mut out),
        Command::Gaps(a) => commands::gaps(&cli.global, &a, &mut out),
        Command::Metrics(a) => commands::metrics(&cli.global, &a, &mut out),
        Command::Explain(a) => commands::explain(&cli.global, &a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
