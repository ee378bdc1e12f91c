//! Shared file I/O: annotation directories, feature files, detection
//! files, and extension-dispatched image writing. All directory walks are
//! sorted so downstream reports are deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use conekit::core::AnnotatedImage;
use conekit::eval::ingest::{parse_darknet_detections, parse_json_detections};
use conekit::eval::Detection;
use conekit::formats::{parse_annotation, FormatId};
use conekit::imaging::{save_jpeg, save_png, RasterImage};
use conekit::similarity::fsfv::load_features;
use conekit::similarity::FeatureVector;

const JPEG_QUALITY: u8 = 90;

/// Files directly inside `dir` with one of `extensions`, sorted by name.
pub fn files_with_extensions(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let entries =
        fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| e.eq_ignore_ascii_case(x)));
        if matches {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads every `*.json` in a directory as one annotation document. The
/// image name is the file name with the `.json` suffix removed. Parse
/// warnings are reported on stderr with their file attached.
pub fn read_annotation_dir(dir: &Path) -> Result<Vec<AnnotatedImage>> {
    let files = files_with_extensions(dir, &["json"])?;
    if files.is_empty() {
        bail!("no .json annotations in {}", dir.display());
    }
    let mut images = Vec::with_capacity(files.len());
    for path in files {
        images.push(read_annotation_file(&path)?);
    }
    Ok(images)
}

/// Reads one annotation document, naming the image after the file.
pub fn read_annotation_file(path: &Path) -> Result<AnnotatedImage> {
    let bytes =
        fs::read(path).with_context(|| format!("reading annotation {}", path.display()))?;
    let parsed = parse_annotation(FormatId::SuperviselyLike, &bytes, None)
        .with_context(|| format!("parsing annotation {}", path.display()))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {}: {}", path.display(), warning.message);
    }
    let mut image = parsed.image;
    image.name = image_name_of(path)?;
    Ok(image)
}

/// Image name for an annotation file: the file name minus `.json`.
fn image_name_of(path: &Path) -> Result<String> {
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .with_context(|| format!("non-UTF-8 file name under {}", path.display()))?;
    Ok(file_name
        .strip_suffix(".json")
        .unwrap_or(file_name)
        .to_string())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    load_features(path).with_context(|| format!("loading features from {}", path.display()))
}

/// Dataset key for a feature file: its stem.
pub fn dataset_key(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("cannot derive a dataset name from {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DetectionFormat {
    /// JSON array of `{image, class, confidence, bbox: [x0, y0, x1, y1]}`.
    Json,
    /// One `image class_index confidence cx cy w h` line per detection,
    /// with normalized coordinates resolved against the ground truth.
    Darknet,
}

/// Saves an image, picking the codec from the output extension
/// (`.png`, `.jpg`, or `.jpeg`).
pub fn save_image(img: &RasterImage, path: &Path) -> Result<()> {
    let extension = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match extension.as_str() {
        "png" => save_png(img, path),
        "jpg" | "jpeg" => save_jpeg(img, path, JPEG_QUALITY),
        other => bail!(
            "cannot infer an image codec from `.{other}` in {} (use .png, .jpg, or .jpeg)",
            path.display()
        ),
    }
    .with_context(|| format!("writing image {}", path.display()))
}

pub fn read_detections(
    path: &Path,
    format: DetectionFormat,
    ground_truth: &[AnnotatedImage],
) -> Result<Vec<Detection>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading detections {}", path.display()))?;
    let detections = match format {
        DetectionFormat::Json => parse_json_detections(&text),
        DetectionFormat::Darknet => {
            let dims: BTreeMap<String, (u32, u32)> = ground_truth
                .iter()
                .map(|image| (image.name.clone(), (image.width(), image.height())))
                .collect();
            parse_darknet_detections(&text, &dims)
        }
    };
    detections.with_context(|| format!("parsing detections {}", path.display()))
}
