//! `conekit stats` — descriptive statistics over annotation directories.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use conekit::stats::{dataset_stats, stats_csv_tables};

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::read_annotation_dir;

#[derive(Args)]
#[command(after_help = "Config keys: stats.include_other, \
stats.combination_min_fraction, output.timestamp (env: \
CONEKIT_STATS_INCLUDE_OTHER, CONEKIT_STATS_COMBINATION_MIN_FRACTION, \
CONEKIT_OUTPUT_TIMESTAMP).")]
pub struct StatsArgs {
    /// Annotation directories to pool into one dataset.
    #[arg(value_name = "DIR", required = true)]
    pub dirs: Vec<PathBuf>,
    /// Emit CSV tables instead of the JSON report.
    #[arg(long)]
    pub csv: bool,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn run(args: &StatsArgs, config: &ToolConfig) -> Result<u8> {
    let mut images = Vec::new();
    for dir in &args.dirs {
        images.extend(read_annotation_dir(dir)?);
    }

    let report = dataset_stats(&images, &config.stats.to_config())?;
    eprintln!(
        "{} images, {} cones ({:.2} per image)",
        report.n_images, report.n_cones, report.cones_per_image
    );

    let text = if args.csv {
        format!(
            "{}{}",
            envelope::csv_header("stats", config),
            stats_csv_tables(&report)
        )
    } else {
        envelope::render("stats", config, report)?
    };
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(0)
}
