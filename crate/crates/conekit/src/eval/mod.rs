//! Detector evaluation: greedy matching of detections to ground truth and
//! average precision over an IoU-threshold sweep.
//!
//! Detections are ranked by descending confidence (ties by input order)
//! and matched one detection to at most one ground-truth box per image; a
//! detection matches the unmatched ground-truth box of highest IoU at or
//! above the threshold (exact IoU ties go to the lowest ground-truth
//! index). Average precision integrates the precision envelope of that
//! ranked list at the recall steps where true positives occur.

pub mod ingest;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::core::{iou, AnnotatedImage, BoundingBox, ConeClass, GeometryError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confidence must be in [0, 1], got {0}")]
    InvalidConfidence(f64),
    #[error("IoU threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("at least one IoU threshold is required")]
    NoThresholds,
    #[error("ground truth has no objects; average precision is undefined")]
    NoGroundTruth,
    #[error("detection references image `{0}`, which is not in the ground truth")]
    UnknownImage(String),
    #[error("duplicate ground-truth image `{0}`")]
    DuplicateImage(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("detection {index}: {message}")]
    InvalidDetection { index: usize, message: String },
    #[error("no image dimensions provided for `{0}`")]
    MissingDims(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One detector output: an image reference, class, confidence, and box.
/// Boxes may extend outside the image; evaluation never clips them.
#[derive(Debug, Clone, Serialize)]
pub struct Detection {
    image_ref: String,
    cls: ConeClass,
    confidence: f64,
    bbox: BoundingBox,
}

impl Detection {
    pub fn new(
        image_ref: impl Into<String>,
        cls: ConeClass,
        confidence: f64,
        bbox: BoundingBox,
    ) -> Result<Self, EvalError> {
        if !(confidence.is_finite() && (0.0..=1.0).contains(&confidence)) {
            return Err(EvalError::InvalidConfidence(confidence));
        }
        Ok(Detection {
            image_ref: image_ref.into(),
            cls,
            confidence,
            bbox,
        })
    }

    pub fn image_ref(&self) -> &str {
        &self.image_ref
    }

    pub fn cls(&self) -> ConeClass {
        self.cls
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Any-class matching: a detection may match a ground-truth box of a
    /// different class.
    ClassAgnostic,
    /// Detections only match ground-truth boxes of the same class; the
    /// ranked list (and so the AP) still pools all classes.
    PerClass,
}

/// Detection indices in evaluation rank order: descending confidence,
/// ties by input index.
pub fn ranked_order(detections: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence
            .partial_cmp(&detections[a].confidence)
            .expect("confidence is validated finite")
            .then(a.cmp(&b))
    });
    order
}

fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    Ok(())
}

fn index_ground_truth(
    ground_truth: &[AnnotatedImage],
) -> Result<BTreeMap<&str, &AnnotatedImage>, EvalError> {
    let mut map = BTreeMap::new();
    for image in ground_truth {
        if map.insert(image.name.as_str(), image).is_some() {
            return Err(EvalError::DuplicateImage(image.name.clone()));
        }
    }
    Ok(map)
}

/// Matches detections against ground truth at one IoU threshold. Returns
/// one flag per input detection (true = true positive). Every detection
/// must reference a ground-truth image; images without detections simply
/// contribute misses.
pub fn match_detections(
    detections: &[Detection],
    ground_truth: &[AnnotatedImage],
    iou_threshold: f64,
    mode: EvalMode,
) -> Result<Vec<bool>, EvalError> {
    check_threshold(iou_threshold)?;
    let gt = index_ground_truth(ground_truth)?;
    let mut used: BTreeMap<&str, Vec<bool>> = gt
        .iter()
        .map(|(name, image)| (*name, vec![false; image.objects().len()]))
        .collect();

    let mut flags = vec![false; detections.len()];
    for idx in ranked_order(detections) {
        let det = &detections[idx];
        let image = *gt
            .get(det.image_ref.as_str())
            .ok_or_else(|| EvalError::UnknownImage(det.image_ref.clone()))?;
        let used_flags = used.get_mut(det.image_ref.as_str()).unwrap();

        let mut best: Option<(usize, f64)> = None;
        for (g, object) in image.objects().iter().enumerate() {
            if used_flags[g] {
                continue;
            }
            if mode == EvalMode::PerClass && object.cls != det.cls {
                continue;
            }
            let overlap = iou(&det.bbox, object.bbox());
            if overlap < iou_threshold {
                continue;
            }
            // Strict > keeps the lowest index on exact ties.
            if best.is_none_or(|(_, b)| overlap > b) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            used_flags[g] = true;
            flags[idx] = true;
        }
    }
    Ok(flags)
}

/// Average precision of a ranked true-positive sequence against `n_gt`
/// ground-truth objects. Precision at each rank is replaced by the best
/// precision at that rank or deeper (the monotone envelope); AP sums the
/// envelope at true-positive ranks and divides by `n_gt`.
pub fn average_precision(ranked_flags: &[bool], n_gt: usize) -> Result<f64, EvalError> {
    if n_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    if ranked_flags.is_empty() {
        return Ok(0.0);
    }
    let n = ranked_flags.len();
    let mut precisions = Vec::with_capacity(n);
    let mut tp = 0usize;
    for (k, flag) in ranked_flags.iter().enumerate() {
        if *flag {
            tp += 1;
        }
        precisions.push(tp as f64 / (k + 1) as f64);
    }
    let mut envelope = precisions;
    for k in (0..n - 1).rev() {
        if envelope[k + 1] > envelope[k] {
            envelope[k] = envelope[k + 1];
        }
    }
    let sum: f64 = ranked_flags
        .iter()
        .zip(&envelope)
        .filter(|(flag, _)| **flag)
        .map(|(_, p)| *p)
        .sum();
    Ok(sum / n_gt as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdEval {
    pub iou_threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Precision and recall of the full detection set.
    pub precision: f64,
    pub recall: f64,
    pub average_precision: f64,
    /// One point per ranked detection.
    pub pr_curve: Vec<PrPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub n_images: usize,
    pub n_ground_truth: usize,
    pub n_detections: usize,
    pub thresholds: Vec<ThresholdEval>,
    /// Mean of `average_precision` over the sweep.
    pub mean_ap: f64,
}

/// The conventional sweep: IoU 0.50 to 0.90 in steps of 0.05.
pub fn default_iou_sweep() -> Vec<f64> {
    (50..=90).step_by(5).map(|t| t as f64 / 100.0).collect()
}

/// Evaluates a detection set at several IoU thresholds. Thresholds are
/// processed in parallel; each one redoes the greedy matching, so a box
/// matched at 0.5 may be a false positive at 0.9.
pub fn ap_sweep(
    detections: &[Detection],
    ground_truth: &[AnnotatedImage],
    iou_thresholds: &[f64],
    mode: EvalMode,
) -> Result<EvalReport, EvalError> {
    if iou_thresholds.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    for t in iou_thresholds {
        check_threshold(*t)?;
    }
    let gt = index_ground_truth(ground_truth)?;
    for det in detections {
        if !gt.contains_key(det.image_ref.as_str()) {
            return Err(EvalError::UnknownImage(det.image_ref.clone()));
        }
    }
    let n_gt: usize = ground_truth.iter().map(|i| i.objects().len()).sum();
    if n_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }

    let ranked = ranked_order(detections);
    let thresholds: Vec<ThresholdEval> = iou_thresholds
        .par_iter()
        .map(|&threshold| {
            let flags = match_detections(detections, ground_truth, threshold, mode)
                .expect("inputs were validated above");
            let ranked_flags: Vec<bool> = ranked.iter().map(|&i| flags[i]).collect();
            let ap = average_precision(&ranked_flags, n_gt)
                .expect("n_gt was checked to be positive");

            let mut pr_curve = Vec::with_capacity(ranked.len());
            let mut tp = 0usize;
            for (k, (&idx, flag)) in ranked.iter().zip(&ranked_flags).enumerate() {
                if *flag {
                    tp += 1;
                }
                pr_curve.push(PrPoint {
                    confidence: detections[idx].confidence,
                    recall: tp as f64 / n_gt as f64,
                    precision: tp as f64 / (k + 1) as f64,
                });
            }
            let true_positives = tp;
            let false_positives = detections.len() - tp;
            ThresholdEval {
                iou_threshold: threshold,
                true_positives,
                false_positives,
                false_negatives: n_gt - true_positives,
                precision: if detections.is_empty() {
                    0.0
                } else {
                    true_positives as f64 / detections.len() as f64
                },
                recall: true_positives as f64 / n_gt as f64,
                average_precision: ap,
                pr_curve,
            }
        })
        .collect();

    let mean_ap =
        thresholds.iter().map(|t| t.average_precision).sum::<f64>() / thresholds.len() as f64;
    Ok(EvalReport {
        mode,
        n_images: ground_truth.len(),
        n_ground_truth: n_gt,
        n_detections: detections.len(),
        thresholds,
        mean_ap,
    })
}
