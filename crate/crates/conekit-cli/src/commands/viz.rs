//! `conekit viz` — render annotation overlays onto an image.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use conekit::imaging::render::render_overlay;
use conekit::imaging::load_image;

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::{read_annotation_file, save_image};

#[derive(Args)]
#[command(after_help = "Config keys: viz.thickness, viz.mask_alpha, \
output.timestamp (env: CONEKIT_VIZ_THICKNESS, CONEKIT_VIZ_MASK_ALPHA, \
CONEKIT_OUTPUT_TIMESTAMP).")]
pub struct VizArgs {
    /// Image to draw on.
    #[arg(long, value_name = "FILE")]
    pub image: PathBuf,
    /// Annotation document to render.
    #[arg(long, value_name = "FILE")]
    pub annotation: PathBuf,
    /// Destination image (.png, .jpg, or .jpeg).
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct VizReport {
    image: String,
    annotation: String,
    output: String,
    width: u32,
    height: u32,
    n_objects: usize,
}

pub fn run(args: &VizArgs, config: &ToolConfig) -> Result<u8> {
    let img = load_image(&args.image)
        .with_context(|| format!("loading image {}", args.image.display()))?;
    let ann = read_annotation_file(&args.annotation)?;
    let rendered = render_overlay(&img, &ann, &config.viz.to_style())?;
    save_image(&rendered, &args.output)?;

    eprintln!(
        "rendered {} objects onto {}",
        ann.objects().len(),
        args.output.display()
    );
    let report = VizReport {
        image: args.image.display().to_string(),
        annotation: args.annotation.display().to_string(),
        output: args.output.display().to_string(),
        width: rendered.width(),
        height: rendered.height(),
        n_objects: ann.objects().len(),
    };
    let text = envelope::render("viz", config, report)?;
    envelope::emit(args.report.as_deref(), &text)?;
    Ok(0)
}
