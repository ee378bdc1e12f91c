//! `conekit contribution check` — gate a dataset contribution.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand};

use conekit::quality::contribution::check_contribution;

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::{read_annotation_dir, read_features};

#[derive(Subcommand)]
pub enum ContributionCommand {
    /// Check one contribution: onboard metadata coverage and
    /// near-duplicate score against the configured bounds.
    Check(CheckArgs),
}

#[derive(Args)]
#[command(after_help = "Config keys: contribution.min_onboard_ratio, \
contribution.duplicate_threshold, contribution.max_duplicate_score, \
similarity.max_matrix_bytes, output.timestamp (env: \
CONEKIT_CONTRIBUTION_MIN_ONBOARD_RATIO, \
CONEKIT_CONTRIBUTION_DUPLICATE_THRESHOLD, \
CONEKIT_CONTRIBUTION_MAX_DUPLICATE_SCORE, \
CONEKIT_SIMILARITY_MAX_MATRIX_BYTES, CONEKIT_OUTPUT_TIMESTAMP). \
Exit 1 when the contribution is rejected.")]
pub struct CheckArgs {
    /// Directory of the contribution's annotation documents.
    #[arg(long, value_name = "DIR")]
    pub annotations: PathBuf,
    /// Feature file covering the contribution's images.
    #[arg(long, value_name = "FILE")]
    pub features: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn run(command: &ContributionCommand, config: &ToolConfig) -> Result<u8> {
    let ContributionCommand::Check(args) = command;
    let images = read_annotation_dir(&args.annotations)?;
    let features = read_features(&args.features)?;

    let report = check_contribution(
        &images,
        &features,
        &config
            .contribution
            .to_config(config.similarity.matrix()),
    )?;
    let accepted = report.accepted;

    for check in &report.checks {
        eprintln!(
            "{} {}: {}",
            if check.pass { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    eprintln!(
        "contribution {}",
        if accepted { "accepted" } else { "rejected" }
    );
    let text = envelope::render("contribution check", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(u8::from(!accepted))
}
