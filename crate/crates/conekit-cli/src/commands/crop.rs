//! `conekit crop` — remove a watermark border from an image and, when
//! asked, translate its annotation into the cropped frame.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use conekit::formats::{write_annotation, FormatId};
use conekit::imaging::{crop_annotation, crop_watermark, load_image};

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::{read_annotation_file, save_image};

#[derive(Args)]
#[command(after_help = "Config keys: crop.border, output.timestamp (env: \
CONEKIT_CROP_BORDER, CONEKIT_OUTPUT_TIMESTAMP).")]
pub struct CropArgs {
    /// Image to crop.
    #[arg(value_name = "IMAGE")]
    pub input: PathBuf,
    /// Destination image (.png, .jpg, or .jpeg).
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Border width to remove from every side (overrides the
    /// configuration).
    #[arg(long, value_name = "PX")]
    pub border: Option<u32>,
    /// Annotation of the input image, to crop alongside it.
    #[arg(long, value_name = "FILE", requires = "annotation_out")]
    pub annotation: Option<PathBuf>,
    /// Destination for the cropped annotation.
    #[arg(long, value_name = "FILE", requires = "annotation")]
    pub annotation_out: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct CropReport {
    input: String,
    output: String,
    border: u32,
    input_width: u32,
    input_height: u32,
    output_width: u32,
    output_height: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    annotation: Option<AnnotationCrop>,
}

#[derive(Serialize)]
struct AnnotationCrop {
    input: String,
    output: String,
    n_objects: usize,
    n_clipped: usize,
    n_dropped: usize,
}

pub fn run(args: &CropArgs, config: &ToolConfig) -> Result<u8> {
    let border = args.border.unwrap_or(config.crop.border);
    let img = load_image(&args.input)
        .with_context(|| format!("loading image {}", args.input.display()))?;
    let cropped = crop_watermark(&img, border)?;
    save_image(&cropped, &args.output)?;

    let annotation = match (&args.annotation, &args.annotation_out) {
        (Some(ann_path), Some(out_path)) => {
            Some(crop_annotation_file(ann_path, out_path, border, &img)?)
        }
        _ => None,
    };

    eprintln!(
        "cropped {}x{} -> {}x{} (border {border})",
        img.width(),
        img.height(),
        cropped.width(),
        cropped.height()
    );
    let report = CropReport {
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        border,
        input_width: img.width(),
        input_height: img.height(),
        output_width: cropped.width(),
        output_height: cropped.height(),
        annotation,
    };
    let text = envelope::render("crop", config, report)?;
    envelope::emit(args.report.as_deref(), &text)?;
    Ok(0)
}

fn crop_annotation_file(
    ann_path: &Path,
    out_path: &Path,
    border: u32,
    img: &conekit::imaging::RasterImage,
) -> Result<AnnotationCrop> {
    let ann = read_annotation_file(ann_path)?;
    if ann.width() != img.width() || ann.height() != img.height() {
        bail!(
            "annotation {} declares {}x{} but the image is {}x{}",
            ann_path.display(),
            ann.width(),
            ann.height(),
            img.width(),
            img.height()
        );
    }
    let outcome = crop_annotation(&ann, border)?;
    let bytes = write_annotation(FormatId::SuperviselyLike, &outcome.annotation)?;
    std::fs::write(out_path, bytes)
        .with_context(|| format!("writing annotation {}", out_path.display()))?;
    Ok(AnnotationCrop {
        input: ann_path.display().to_string(),
        output: out_path.display().to_string(),
        n_objects: outcome.annotation.objects().len(),
        n_clipped: outcome.clipped.len(),
        n_dropped: outcome.dropped.len(),
    })
}
