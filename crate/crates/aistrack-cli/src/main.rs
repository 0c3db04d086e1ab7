//! Command-line driver for the trajectory extraction pipeline.
//!
//! The stages mirror the library: `decode` turns raw day files into decoded
//! ones, `calibrate` learns the quantile table, `extract` builds split (or
//! unsplit) trajectories, `assess` scores and filters them spatially, and
//! `compare` runs the reference methods side by side. Every command prints a
//! JSON summary on standard output and is deterministic for identical
//! inputs and flags.

mod commands;
mod config;
mod pipeline;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aistrack", version, about = "AIS vessel trajectory extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode raw AIS day files into the decoded day-file schema.
    Decode(commands::decode::DecodeArgs),
    /// Calibrate the split-threshold quantile table from decoded files.
    Calibrate(commands::calibrate::CalibrateArgs),
    /// Extract trajectories from decoded files.
    Extract(commands::extract::ExtractArgs),
    /// Assess extracted trajectories spatially.
    Assess(commands::assess::AssessArgs),
    /// Compare the quantile splitter with the reference methods.
    Compare(commands::compare::CompareArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Decode(args) => commands::decode::run(&args),
        Command::Calibrate(args) => commands::calibrate::run(&args),
        Command::Extract(args) => commands::extract::run(&args),
        Command::Assess(args) => commands::assess::run(&args),
        Command::Compare(args) => commands::compare::run(&args),
    }
}
