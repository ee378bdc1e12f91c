//! `conekit exam grade` — grade a labeling submission against ground
//! truth.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand};

use conekit::quality::exam::{grade_exam, render_exam_text};

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::read_annotation_dir;

#[derive(Subcommand)]
pub enum ExamCommand {
    /// Compare a submission directory against a ground-truth directory.
    Grade(GradeArgs),
}

#[derive(Args)]
#[command(after_help = "Config keys: exam.match_iou, exam.min_recall, \
exam.min_precision, exam.min_mean_iou, output.timestamp (env: \
CONEKIT_EXAM_MATCH_IOU, CONEKIT_EXAM_MIN_RECALL, \
CONEKIT_EXAM_MIN_PRECISION, CONEKIT_EXAM_MIN_MEAN_IOU, \
CONEKIT_OUTPUT_TIMESTAMP). Both directories must hold the same set of \
<image>.json documents. Exit 1 when the verdict fails.")]
pub struct GradeArgs {
    /// Directory of submitted annotation documents.
    #[arg(long, value_name = "DIR")]
    pub submission: PathBuf,
    /// Directory of ground-truth annotation documents.
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

pub fn run(command: &ExamCommand, config: &ToolConfig) -> Result<u8> {
    let ExamCommand::Grade(args) = command;
    let submission = read_annotation_dir(&args.submission)?;
    let truth = read_annotation_dir(&args.truth)?;

    let report = grade_exam(&submission, &truth, &config.exam.to_config())?;
    let pass = report.verdict.pass;

    eprint!("{}", render_exam_text(&report));
    let text = envelope::render("exam grade", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(u8::from(!pass))
}
