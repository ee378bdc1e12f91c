//! `conekit similarity score|sample` — duplicate scoring and diverse
//! sampling over feature files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use conekit::similarity::{sample_diverse, score_report, score_report_csv, FeatureVector};

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::{dataset_key, read_features};

#[derive(Subcommand)]
pub enum SimilarityCommand {
    /// Duplicate scores per dataset and globally, at each threshold.
    Score(ScoreArgs),
    /// Greedy diverse subset: keep an image only when it stays below the
    /// similarity threshold against everything already kept.
    Sample(SampleArgs),
}

#[derive(Args)]
#[command(after_help = "Config keys: similarity.thresholds, \
similarity.max_matrix_bytes, output.timestamp (env: \
CONEKIT_SIMILARITY_THRESHOLDS, CONEKIT_SIMILARITY_MAX_MATRIX_BYTES, \
CONEKIT_OUTPUT_TIMESTAMP). --threshold overrides the config list.")]
pub struct ScoreArgs {
    /// Feature files, one dataset each, keyed by file stem.
    #[arg(required = true)]
    pub features: Vec<PathBuf>,
    /// Score at these thresholds instead of the configured list.
    #[arg(long = "threshold", value_name = "T")]
    pub thresholds: Vec<f64>,
    /// Emit the scores as CSV instead of a JSON report.
    #[arg(long)]
    pub csv: bool,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
#[command(after_help = "Config keys: similarity.sample_threshold, \
output.timestamp (env: CONEKIT_SIMILARITY_SAMPLE_THRESHOLD, \
CONEKIT_OUTPUT_TIMESTAMP). --threshold overrides the config value.")]
pub struct SampleArgs {
    /// Feature file covering the candidate images.
    pub features: PathBuf,
    /// Keep an image only if its similarity to every kept image is
    /// below this value.
    #[arg(long, value_name = "T")]
    pub threshold: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SampleReport {
    threshold: f64,
    n_input: usize,
    n_kept: usize,
    kept: Vec<String>,
}

pub fn run(command: &SimilarityCommand, config: &ToolConfig) -> Result<u8> {
    match command {
        SimilarityCommand::Score(args) => score(args, config),
        SimilarityCommand::Sample(args) => sample(args, config),
    }
}

fn score(args: &ScoreArgs, config: &ToolConfig) -> Result<u8> {
    let mut datasets: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
    for path in &args.features {
        let key = dataset_key(path)?;
        if datasets.contains_key(&key) {
            bail!("two feature files share the dataset name `{key}`");
        }
        datasets.insert(key, read_features(path)?);
    }

    let thresholds = if args.thresholds.is_empty() {
        config.similarity.thresholds.clone()
    } else {
        args.thresholds.clone()
    };
    let report = score_report(&datasets, &thresholds, &config.similarity.matrix())?;

    eprintln!(
        "{} datasets, {} images total",
        report.datasets.len(),
        report.global.n_images
    );
    let text = if args.csv {
        format!(
            "{}{}",
            envelope::csv_header("similarity score", config),
            score_report_csv(&report)
        )
    } else {
        envelope::render("similarity score", config, report)?
    };
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(0)
}

fn sample(args: &SampleArgs, config: &ToolConfig) -> Result<u8> {
    let features = read_features(&args.features)?;
    let threshold = args
        .threshold
        .unwrap_or(config.similarity.sample_threshold);
    let kept_indices = sample_diverse(&features, threshold)?;

    let report = SampleReport {
        threshold,
        n_input: features.len(),
        n_kept: kept_indices.len(),
        kept: kept_indices
            .iter()
            .map(|&i| features[i].image_ref().to_string())
            .collect(),
    };
    eprintln!("kept {} of {} images", report.n_kept, report.n_input);
    let text = envelope::render("similarity sample", config, report)?;
    envelope::emit(args.output.as_deref(), &text)?;
    Ok(0)
}
