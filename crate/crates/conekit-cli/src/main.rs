//! `conekit` — one command-line package for cone-dataset curation:
//! format conversion, layout validation, similarity scoring and
//! sampling, annotation sanity checks, exam grading, contribution
//! gating, statistics, detector evaluation, watermark cropping, overlay
//! rendering, and feature extraction.
//!
//! Exit codes: 0 = ran and found nothing to flag; 1 = ran and found
//! problems (findings, failed gates); 2 = could not run (usage, input,
//! or config errors).

mod commands;
mod config;
mod envelope;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::ToolConfig;

#[derive(Parser)]
#[command(
    name = "conekit",
    version,
    about = "Curation toolkit for cone-annotation datasets",
    after_help = "Configuration: a TOML file (--config), overridden by \
CONEKIT_<SECTION>_<KEY> environment variables, overridden by flags. Each \
subcommand's --help lists the config keys it reads. Reports embed the \
effective config; the timestamp header can be disabled for byte-stable \
output."
)]
struct Cli {
    /// TOML config file with tool defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap worker parallelism (0 = one worker per core). Reports never
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    /// Omit the generated_at field, making reports byte-stable.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an annotation file between formats.
    Convert(commands::convert::ConvertArgs),
    /// Validate a dataset tree's layout and file naming.
    Validate(commands::validate::ValidateArgs),
    /// Near-duplicate scoring and diverse sampling on feature files.
    #[command(subcommand)]
    Similarity(commands::similarity::SimilarityCommand),
    /// Run annotation sanity rules over a dataset tree.
    Sanity(commands::sanity::SanityArgs),
    /// Grade labeling submissions against ground truth.
    #[command(subcommand)]
    Exam(commands::exam::ExamCommand),
    /// Gate dataset contributions on metadata and duplicate scores.
    #[command(subcommand)]
    Contribution(commands::contribution::ContributionCommand),
    /// Aggregate dataset statistics from annotation directories.
    Stats(commands::stats::StatsArgs),
    /// Evaluate detections against ground truth.
    #[command(subcommand)]
    Eval(commands::eval::EvalCommand),
    /// Remove a watermark border from an image (and its annotation).
    Crop(commands::crop::CropArgs),
    /// Render annotation overlays onto an image.
    Viz(commands::viz::VizArgs),
    /// Extract perceptual feature vectors from images.
    #[command(subcommand)]
    Features(commands::features::FeaturesCommand),
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();

    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let mut config: ToolConfig = config::load_config(cli.config.as_deref(), std::env::vars())?;
    if cli.no_timestamp {
        config.output.timestamp = false;
    }

    match &cli.command {
        Command::Convert(args) => commands::convert::run(args),
        Command::Validate(args) => commands::validate::run(args, &config),
        Command::Similarity(cmd) => commands::similarity::run(cmd, &config),
        Command::Sanity(args) => commands::sanity::run(args, &config),
        Command::Exam(cmd) => commands::exam::run(cmd, &config),
        Command::Contribution(cmd) => commands::contribution::run(cmd, &config),
        Command::Stats(args) => commands::stats::run(args, &config),
        Command::Eval(cmd) => commands::eval::run(cmd, &config),
        Command::Crop(args) => commands::crop::run(args, &config),
        Command::Viz(args) => commands::viz::run(args, &config),
        Command::Features(cmd) => commands::features::run(cmd, &config),
    }
}
