//! `conekit features extract` — compute similarity feature vectors for
//! images and store them in one feature file.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use conekit::imaging::load_image;
use conekit::similarity::extract::extract_features;
use conekit::similarity::fsfv::save_features;
use conekit::similarity::FeatureVector;

use crate::config::ToolConfig;
use crate::envelope;
use crate::inputs::files_with_extensions;

#[derive(Subcommand)]
pub enum FeaturesCommand {
    /// Extract one feature vector per image, named after the image file.
    Extract(ExtractArgs),
}

#[derive(Args)]
#[command(after_help = "Config keys: extract.resized_side, extract.grid, \
extract.orientation_bins, output.timestamp (env: \
CONEKIT_EXTRACT_RESIZED_SIDE, CONEKIT_EXTRACT_GRID, \
CONEKIT_EXTRACT_ORIENTATION_BINS, CONEKIT_OUTPUT_TIMESTAMP).")]
pub struct ExtractArgs {
    /// Image files or directories of .png/.jpg/.jpeg images.
    #[arg(value_name = "PATH", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Feature file to write.
    #[arg(short, long, value_name = "FILE")]
    pub output: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtractReport {
    n_images: usize,
    dim: usize,
    output: String,
}

pub fn run(command: &FeaturesCommand, config: &ToolConfig) -> Result<u8> {
    let FeaturesCommand::Extract(args) = command;
    let mut files = Vec::new();
    for input in &args.inputs {
        if input.is_dir() {
            files.extend(files_with_extensions(input, &["png", "jpg", "jpeg"])?);
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.dedup();
    if files.is_empty() {
        bail!("no images to extract features from");
    }

    let extract_config = config.extract.to_config();
    let vectors: Vec<FeatureVector> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .with_context(|| format!("non-UTF-8 file name {}", path.display()))?;
            let img = load_image(path)
                .with_context(|| format!("loading image {}", path.display()))?;
            extract_features(&img, name, &extract_config)
                .with_context(|| format!("extracting features from {}", path.display()))
        })
        .collect::<Result<_>>()?;

    save_features(&vectors, &args.output)
        .with_context(|| format!("writing features to {}", args.output.display()))?;
    let dim = vectors[0].dim();
    eprintln!(
        "extracted {} feature vectors (dim {dim}) into {}",
        vectors.len(),
        args.output.display()
    );
    let report = ExtractReport {
        n_images: vectors.len(),
        dim,
        output: args.output.display().to_string(),
    };
    let text = envelope::render("features extract", config, report)?;
    envelope::emit(args.report.as_deref(), &text)?;
    Ok(0)
}
