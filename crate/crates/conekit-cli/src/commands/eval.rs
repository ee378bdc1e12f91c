//! `conekit eval ap` — average precision of detections against ground
//! truth.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};

use conekit::eval::{ap_sweep, default_iou_sweep, EvalMode};

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::{read_annotation_dir, read_detections, DetectionFormat};

#[derive(Subcommand)]
pub enum EvalCommand {
    /// Score detections with average precision, swept over one or more
    /// IoU thresholds.
    Ap(ApArgs),
}

#[derive(Args)]
#[command(after_help = "Config keys: eval.iou_thresholds, eval.mode, \
output.timestamp (env: CONEKIT_EVAL_IOU_THRESHOLDS, CONEKIT_EVAL_MODE, \
CONEKIT_OUTPUT_TIMESTAMP). An empty threshold list means the standard \
0.50..0.90 sweep in steps of 0.05.")]
pub struct ApArgs {
    /// Detection file to score.
    #[arg(long, value_name = "FILE")]
    pub detections: PathBuf,
    /// Directory of ground-truth annotation documents.
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,
    /// Detection file format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: DetectionFormat,
    /// IoU thresholds to sweep (overrides the configuration).
    #[arg(long, value_name = "T")]
    pub iou: Vec<f64>,
    /// Match detections within each class instead of across all classes.
    #[arg(long)]
    pub per_class: bool,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn run(command: &EvalCommand, config: &ToolConfig) -> Result<u8> {
    let EvalCommand::Ap(args) = command;
    let ground_truth = read_annotation_dir(&args.truth)?;
    let detections = read_detections(&args.detections, args.format, &ground_truth)?;

    let thresholds = if !args.iou.is_empty() {
        args.iou.clone()
    } else if !config.eval.iou_thresholds.is_empty() {
        config.eval.iou_thresholds.clone()
    } else {
        default_iou_sweep()
    };
    let mode = if args.per_class {
        EvalMode::PerClass
    } else {
        match config.eval.mode.as_str() {
            "class_agnostic" => EvalMode::ClassAgnostic,
            "per_class" => EvalMode::PerClass,
            other => bail!("eval.mode must be `class_agnostic` or `per_class`, got `{other}`"),
        }
    };

    let report = ap_sweep(&detections, &ground_truth, &thresholds, mode)?;
    eprintln!(
        "{} detections on {} images: mean AP {:.4} over {} thresholds",
        report.n_detections,
        report.n_images,
        report.mean_ap,
        report.thresholds.len()
    );
    let text = envelope::render("eval ap", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(0)
}
