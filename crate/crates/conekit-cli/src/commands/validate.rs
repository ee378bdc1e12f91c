//! `conekit validate` — dataset tree layout and naming checks.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use conekit::formats::layout::{validate_layout, LayoutFinding};

use crate::config::ToolConfig;
use crate::envelope;

#[derive(Args)]
#[command(after_help = "Config keys: layout.image_dir, \
layout.annotation_dir, output.timestamp (env: CONEKIT_LAYOUT_IMAGE_DIR, \
CONEKIT_LAYOUT_ANNOTATION_DIR, CONEKIT_OUTPUT_TIMESTAMP). Exit 1 when \
findings exist.")]
pub struct ValidateArgs {
    /// Dataset root: one directory per team, each with image and
    /// annotation subdirectories.
    pub root: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidateReport {
    root: String,
    n_pairs: usize,
    findings: Vec<LayoutFinding>,
}

pub fn run(args: &ValidateArgs, config: &ToolConfig) -> Result<u8> {
    let (layout, findings) = validate_layout(&args.root, &config.layout.to_config())
        .with_context(|| format!("validating {}", args.root.display()))?;

    let report = ValidateReport {
        root: args.root.display().to_string(),
        n_pairs: layout.pairs.len(),
        findings,
    };
    let clean = report.findings.is_empty();
    eprintln!(
        "{} image/annotation pairs, {} findings",
        report.n_pairs,
        report.findings.len()
    );
    let text = envelope::render("validate", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(u8::from(!clean))
}
