//! Image-similarity scoring for duplicate control and diverse sampling.
//!
//! Vectors are compared with cosine similarity
//! `K(X, Y) = <X, Y> / (|X| |Y|)`. The duplicate score of a dataset at
//! threshold `T` is the mean, over its images, of how many *other* images
//! are at least `T`-similar; scores are computed per dataset (local) and
//! over the union of all datasets (global).
//!
//! Every reduction here runs in a fixed per-entry order, so results are
//! bit-identical regardless of rayon worker count. Dot products accumulate
//! in `f64` over `f32` storage.

pub mod extract;
pub mod fsfv;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("feature vector `{0}` is empty")]
    EmptyVector(String),
    #[error("feature vector `{0}` has non-finite entries")]
    NonFinite(String),
    #[error("feature vector `{0}` has zero norm; cosine similarity is undefined for it")]
    ZeroVector(String),
    #[error("feature vectors have mismatched dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("similarity threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("at least one feature vector is required")]
    EmptyInput,
    #[error("dataset `{0}` has no feature vectors")]
    EmptyDataset(String),
    #[error(
        "a full similarity matrix for {n} vectors needs {bytes} bytes, above the {cap} byte cap"
    )]
    MatrixTooLarge { n: usize, bytes: u64, cap: u64 },
    #[error("feature file: {message} (at byte {offset})")]
    FileFormat { offset: u64, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An image's feature vector. Guaranteed non-empty, finite, and of
/// positive norm; the L2 norm is cached at construction.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    image_ref: String,
    values: Vec<f32>,
    norm: f64,
}

impl FeatureVector {
    pub fn new(image_ref: impl Into<String>, values: Vec<f32>) -> Result<Self, SimilarityError> {
        let image_ref = image_ref.into();
        if values.is_empty() {
            return Err(SimilarityError::EmptyVector(image_ref));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimilarityError::NonFinite(image_ref));
        }
        let norm = dot_f32(&values, &values).sqrt();
        if norm <= 0.0 {
            return Err(SimilarityError::ZeroVector(image_ref));
        }
        Ok(FeatureVector {
            image_ref,
            values,
            norm,
        })
    }

    pub fn image_ref(&self) -> &str {
        &self.image_ref
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Sequential dot product with f64 accumulation; the fixed order keeps
/// results identical across thread counts.
fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    let mut sum = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        sum += *x as f64 * *y as f64;
    }
    sum
}

/// Cosine similarity of two feature vectors.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> Result<f64, SimilarityError> {
    if a.dim() != b.dim() {
        return Err(SimilarityError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(dot_f32(&a.values, &b.values) / (a.norm * b.norm))
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixConfig {
    /// Refuse to materialise a full matrix above this many bytes;
    /// duplicate scoring then falls back to a streaming path with
    /// identical results.
    pub max_matrix_bytes: u64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            max_matrix_bytes: 2 * 1024 * 1024 * 1024,
        }
    }
}

/// Dense pairwise cosine matrix. Symmetric, ones on the diagonal (within
/// float rounding of the norm cache).
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    names: Vec<String>,
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

fn check_uniform_dims(features: &[FeatureVector]) -> Result<usize, SimilarityError> {
    let dim = features.first().map(|f| f.dim()).unwrap_or(0);
    for f in features {
        if f.dim() != dim {
            return Err(SimilarityError::DimensionMismatch(dim, f.dim()));
        }
    }
    Ok(dim)
}

/// Computes the full pairwise cosine matrix. Each entry is an independent
/// fixed-order dot product, so the matrix is exactly symmetric and
/// identical for any worker count.
pub fn similarity_matrix(
    features: &[FeatureVector],
    config: &MatrixConfig,
) -> Result<SimilarityMatrix, SimilarityError> {
    if features.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    check_uniform_dims(features)?;
    let n = features.len();
    let bytes = (n as u64) * (n as u64) * 8;
    if bytes > config.max_matrix_bytes {
        return Err(SimilarityError::MatrixTooLarge {
            n,
            bytes,
            cap: config.max_matrix_bytes,
        });
    }

    let mut values = vec![0.0f64; n * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let fi = &features[i];
            for (j, slot) in row.iter_mut().enumerate() {
                let fj = &features[j];
                *slot = dot_f32(&fi.values, &fj.values) / (fi.norm * fj.norm);
            }
        });

    Ok(SimilarityMatrix {
        names: features.iter().map(|f| f.image_ref.clone()).collect(),
        n,
        values,
    })
}

fn check_threshold(threshold: f64) -> Result<(), SimilarityError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SimilarityError::InvalidThreshold(threshold));
    }
    Ok(())
}

/// Mean number of *other* images at similarity `>= threshold`, over all
/// images of the matrix.
pub fn duplicate_score(
    matrix: &SimilarityMatrix,
    threshold: f64,
) -> Result<f64, SimilarityError> {
    check_threshold(threshold)?;
    let n = matrix.n;
    let total: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0u64;
            for j in 0..n {
                if j != i && matrix.get(i, j) >= threshold {
                    count += 1;
                }
            }
            count
        })
        .sum();
    Ok(total as f64 / n as f64)
}

/// Duplicate scores for several thresholds without materialising the
/// matrix. Bit-identical to the matrix path: the per-pair arithmetic is
/// the same expression.
fn duplicate_scores_streaming(
    features: &[FeatureVector],
    thresholds: &[f64],
) -> Vec<f64> {
    let n = features.len();
    let totals: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fi = &features[i];
            let mut counts = vec![0u64; thresholds.len()];
            for (j, fj) in features.iter().enumerate() {
                if j == i {
                    continue;
                }
                let s = dot_f32(&fi.values, &fj.values) / (fi.norm * fj.norm);
                for (slot, t) in counts.iter_mut().zip(thresholds) {
                    if s >= *t {
                        *slot += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; thresholds.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    totals
        .into_iter()
        .map(|total| total as f64 / n as f64)
        .collect()
}

/// Renders a threshold the way report keys and CSV cells show it.
pub fn threshold_key(threshold: f64) -> String {
    format!("{threshold}")
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetScores {
    pub n_images: usize,
    /// Duplicate score per threshold, keyed by [`threshold_key`].
    pub scores: BTreeMap<String, f64>,
}

/// Local (per dataset) and global (union) duplicate scores.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub thresholds: Vec<f64>,
    pub datasets: BTreeMap<String, DatasetScores>,
    pub global: DatasetScores,
}

/// Duplicate scores of one image set at each threshold. Uses the full
/// matrix when it fits under the byte cap, the streaming path otherwise;
/// both give the same bits.
pub fn duplicate_scores(
    features: &[FeatureVector],
    thresholds: &[f64],
    config: &MatrixConfig,
) -> Result<Vec<f64>, SimilarityError> {
    let n = features.len() as u64;
    if n * n * 8 <= config.max_matrix_bytes {
        let matrix = similarity_matrix(features, config)?;
        thresholds
            .iter()
            .map(|t| duplicate_score(&matrix, *t))
            .collect()
    } else {
        check_uniform_dims(features)?;
        for t in thresholds {
            check_threshold(*t)?;
        }
        Ok(duplicate_scores_streaming(features, thresholds))
    }
}

/// Duplicate scores per dataset plus the global score over the union of
/// all datasets (in dataset-key order).
pub fn score_report(
    datasets: &BTreeMap<String, Vec<FeatureVector>>,
    thresholds: &[f64],
    config: &MatrixConfig,
) -> Result<ScoreReport, SimilarityError> {
    if datasets.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    for t in thresholds {
        check_threshold(*t)?;
    }
    for (id, features) in datasets {
        if features.is_empty() {
            return Err(SimilarityError::EmptyDataset(id.clone()));
        }
    }

    let mut report_datasets = BTreeMap::new();
    for (id, features) in datasets {
        let scores = duplicate_scores(features, thresholds, config)?;
        report_datasets.insert(
            id.clone(),
            DatasetScores {
                n_images: features.len(),
                scores: zip_scores(thresholds, &scores),
            },
        );
    }

    let union: Vec<FeatureVector> = datasets.values().flatten().cloned().collect();
    let global_scores = duplicate_scores(&union, thresholds, config)?;
    Ok(ScoreReport {
        thresholds: thresholds.to_vec(),
        datasets: report_datasets,
        global: DatasetScores {
            n_images: union.len(),
            scores: zip_scores(thresholds, &global_scores),
        },
    })
}

fn zip_scores(thresholds: &[f64], scores: &[f64]) -> BTreeMap<String, f64> {
    thresholds
        .iter()
        .zip(scores)
        .map(|(t, s)| (threshold_key(*t), *s))
        .collect()
}

/// CSV rendering of a score report: one row per (scope, dataset,
/// threshold).
pub fn score_report_csv(report: &ScoreReport) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["scope", "dataset", "threshold", "duplicate_score", "n_images"])
        .expect("in-memory CSV writes cannot fail");
    for (id, ds) in &report.datasets {
        for t in &report.thresholds {
            let key = threshold_key(*t);
            writer
                .write_record([
                    "local",
                    id.as_str(),
                    key.as_str(),
                    &format!("{}", ds.scores[&key]),
                    &ds.n_images.to_string(),
                ])
                .expect("in-memory CSV writes cannot fail");
        }
    }
    for t in &report.thresholds {
        let key = threshold_key(*t);
        writer
            .write_record([
                "global",
                "all",
                key.as_str(),
                &format!("{}", report.global.scores[&key]),
                &report.global.n_images.to_string(),
            ])
            .expect("in-memory CSV writes cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory CSV writes cannot fail"))
        .expect("CSV output is UTF-8")
}

/// Greedy diverse sampling: visit images in lexicographic `image_ref`
/// order (ties broken by input index) and keep one iff its cosine
/// similarity to every already-kept image is below `threshold`. Returns
/// kept indices into `features`, in acceptance order.
///
/// The first visited image is always kept, kept images are pairwise
/// dissimilar, and every rejected image is `>= threshold`-similar to some
/// kept one.
pub fn sample_diverse(
    features: &[FeatureVector],
    threshold: f64,
) -> Result<Vec<usize>, SimilarityError> {
    check_threshold(threshold)?;
    check_uniform_dims(features)?;

    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| {
        features[a]
            .image_ref
            .cmp(&features[b].image_ref)
            .then(a.cmp(&b))
    });

    let mut kept: Vec<usize> = Vec::new();
    for idx in order {
        let candidate = &features[idx];
        let mut dissimilar = true;
        for &k in &kept {
            let s = dot_f32(&candidate.values, &features[k].values)
                / (candidate.norm * features[k].norm);
            if s >= threshold {
                dissimilar = false;
                break;
            }
        }
        if dissimilar {
            kept.push(idx);
        }
    }
    Ok(kept)
}
