//! `acm` — run online continual learning experiments, benchmark the
//! index, and manage feature files from the command line.

mod commands;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acm", version, about = "Streaming kNN continual learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: pretrain, online stream, retention sweep.
    Run(commands::RunArgs),
    /// Measure index search latency across corpus sizes.
    Bench(commands::BenchArgs),
    /// Split a feature file into pretrain/online/test files.
    Split(commands::SplitArgs),
    /// Generate a synthetic drift stream as a feature file.
    GenDrift(commands::GenDriftArgs),
    /// Print what a feature file, index snapshot, or report holds.
    Inspect(commands::InspectArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Bench(args) => commands::bench(args),
        Command::Split(args) => commands::split(args),
        Command::GenDrift(args) => commands::gen_drift(args),
        Command::Inspect(args) => commands::inspect(args),
    }
}
