//! `conekit sanity` — annotation sanity rules over a dataset tree.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use conekit::quality::sanity::sanity_scan_tree;

use crate::config::ToolConfig;
use crate::envelope;

#[derive(Args)]
#[command(after_help = "Config keys: sanity.min_box_area, \
sanity.min_box_side, sanity.duplicate_iou, layout.image_dir, \
layout.annotation_dir, output.timestamp (env: \
CONEKIT_SANITY_MIN_BOX_AREA, CONEKIT_SANITY_MIN_BOX_SIDE, \
CONEKIT_SANITY_DUPLICATE_IOU, CONEKIT_LAYOUT_IMAGE_DIR, \
CONEKIT_LAYOUT_ANNOTATION_DIR, CONEKIT_OUTPUT_TIMESTAMP). Exit 1 when \
any finding, layout problem, or unreadable file is reported.")]
pub struct SanityArgs {
    /// Dataset root: one directory per team, each with image and
    /// annotation subdirectories.
    pub root: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn run(args: &SanityArgs, config: &ToolConfig) -> Result<u8> {
    let report = sanity_scan_tree(
        &args.root,
        &config.layout.to_config(),
        &config.sanity.to_config(),
    )
    .with_context(|| format!("scanning {}", args.root.display()))?;

    let clean = report.is_clean();
    eprintln!(
        "{} images checked: {} findings, {} layout findings, {} file errors",
        report.n_images,
        report.findings.len(),
        report.layout_findings.len(),
        report.file_errors.len()
    );
    let text = envelope::render("sanity", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(u8::from(!clean))
}
