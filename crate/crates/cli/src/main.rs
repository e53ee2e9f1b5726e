//! `gridfreq` — batch pipeline for deterministic-frequency-deviation
//! analysis. Subcommands mirror the pipeline stages: `synth` generates a
//! dataset, `rocof` extracts hourly RoCoFs, `fit-linear` fits the step-size
//! models, `fit-ml` trains the boosted model and explains it with SHAP.

mod commands;
mod pipeline;
mod reports;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gridfreq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Exactly one data source: either a frequency file (plus a feature file
/// where the command needs one), or a synthetic config.
#[derive(Args, Debug)]
struct SourceArgs {
    /// Frequency record CSV (`timestamp_utc,frequency_hz`)
    #[arg(long, conflicts_with = "synth_config")]
    freq: Option<PathBuf>,
    /// Hourly feature CSV (`hour_utc,<feature...>`)
    #[arg(long, conflicts_with = "synth_config")]
    features: Option<PathBuf>,
    /// Synthetic dataset config (flat key=value file)
    #[arg(long)]
    synth_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WindowArgs {
    /// Half-width T of the RoCoF search interval around the hour (s)
    #[arg(long = "window-T", default_value_t = 30)]
    window_t: u32,
    /// Length L of the rectangular smoothing window (s)
    #[arg(long = "window-L", default_value_t = 30)]
    window_l: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GridChoice {
    /// 4-point grid for desk-scale runs
    Small,
    /// Full 72-point default grid
    Paper,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with known ground truth
    Synth {
        /// Synthetic dataset config (flat key=value file)
        #[arg(long)]
        synth_config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract hourly RoCoFs from a frequency record
    Rocof {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the load-based and refined linear models and score them
    FitLinear {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Seed for the train/test split
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hour starting a 24 h block pinned into the test set (ISO-8601)
        #[arg(long)]
        pin_block: Option<String>,
    },
    /// Cross-validated boosted-tree model with SHAP attribution
    FitMl {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        windows: WindowArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Seed for split, folds and training
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hyperparameter grid to search
        #[arg(long, value_enum, default_value_t = GridChoice::Small)]
        grid: GridChoice,
        /// Hour starting a 24 h block pinned into the test set (ISO-8601)
        #[arg(long)]
        pin_block: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { synth_config, out } => commands::synth(&synth_config, &out),
        Command::Rocof { source, windows, out } => commands::rocof(&source, &windows, &out),
        Command::FitLinear {
            source,
            windows,
            out,
            seed,
            pin_block,
        } => commands::fit_linear(&source, &windows, &out, seed, pin_block.as_deref()),
        Command::FitMl {
            source,
            windows,
            out,
            seed,
            grid,
            pin_block,
        } => commands::fit_ml(&source, &windows, &out, seed, grid, pin_block.as_deref()),
    }
}
