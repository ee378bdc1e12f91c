//! Labeling-exam grading: compare a submission against ground truth and
//! decide pass/fail.
//!
//! Per image, candidate (ground truth, submission) pairs are sorted by
//! descending IoU (ties by ground-truth index, then submission index) and
//! matched greedily one-to-one; a pair counts as matched when its IoU is
//! at least `match_iou`. Matching ignores classes and tags; class and tag
//! disagreements on matched pairs are reported as findings, not misses.
//!
//! The verdict checks exactly three bars: recall, precision, and mean IoU
//! over matched pairs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::core::{iou, AnnotatedImage, ConeClass, ObjectTag};
use crate::quality::QualityError;

#[derive(Debug, Clone, Serialize)]
pub struct ExamConfig {
    /// Minimum IoU for a submission box to match a ground-truth box.
    pub match_iou: f64,
    pub min_recall: f64,
    pub min_precision: f64,
    pub min_mean_iou: f64,
}

impl Default for ExamConfig {
    fn default() -> Self {
        ExamConfig {
            match_iou: 0.7,
            min_recall: 0.98,
            min_precision: 0.98,
            min_mean_iou: 0.85,
        }
    }
}

impl ExamConfig {
    fn validate(&self) -> Result<(), QualityError> {
        if !(self.match_iou > 0.0 && self.match_iou <= 1.0) {
            return Err(QualityError::Config(format!(
                "match_iou must be in (0, 1], got {}",
                self.match_iou
            )));
        }
        for (name, v) in [
            ("min_recall", self.min_recall),
            ("min_precision", self.min_precision),
            ("min_mean_iou", self.min_mean_iou),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(QualityError::Config(format!(
                    "{name} must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub gt_index: usize,
    pub sub_index: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassMismatch {
    pub gt_index: usize,
    pub sub_index: usize,
    pub expected: ConeClass,
    pub got: ConeClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct TagMismatch {
    pub gt_index: usize,
    pub sub_index: usize,
    pub missing: Vec<ObjectTag>,
    pub extra: Vec<ObjectTag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageExam {
    pub image_ref: String,
    pub matched: Vec<MatchedPair>,
    /// Ground-truth indices with no matching submission box.
    pub missed: Vec<usize>,
    /// Submission indices matching no ground-truth box.
    pub spurious: Vec<usize>,
    pub misclassified: Vec<ClassMismatch>,
    pub tag_mismatches: Vec<TagMismatch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExamAggregates {
    pub n_ground_truth: usize,
    pub n_submitted: usize,
    pub n_matched: usize,
    pub recall: f64,
    pub precision: f64,
    pub mean_iou: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExamVerdict {
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExamReport {
    pub images: Vec<ImageExam>,
    pub aggregates: ExamAggregates,
    pub verdict: ExamVerdict,
}

fn index_by_name<'a>(
    images: &'a [AnnotatedImage],
    side: &'static str,
) -> Result<BTreeMap<&'a str, &'a AnnotatedImage>, QualityError> {
    let mut map = BTreeMap::new();
    for image in images {
        if map.insert(image.name.as_str(), image).is_some() {
            return Err(QualityError::DuplicateImage {
                name: image.name.clone(),
                side,
            });
        }
    }
    Ok(map)
}

/// Grades a submission against ground truth. Both sides must cover
/// exactly the same image names.
pub fn grade_exam(
    submission: &[AnnotatedImage],
    ground_truth: &[AnnotatedImage],
    config: &ExamConfig,
) -> Result<ExamReport, QualityError> {
    config.validate()?;
    let subs = index_by_name(submission, "the submission")?;
    let gts = index_by_name(ground_truth, "the ground truth")?;

    let missing: Vec<String> = gts
        .keys()
        .filter(|k| !subs.contains_key(*k))
        .map(|k| (*k).to_owned())
        .collect();
    let extra: Vec<String> = subs
        .keys()
        .filter(|k| !gts.contains_key(*k))
        .map(|k| (*k).to_owned())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(QualityError::NameSetMismatch { missing, extra });
    }

    let images: Vec<ImageExam> = gts
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(name, gt)| grade_image(name, subs[*name], gt, config))
        .collect();

    let n_ground_truth: usize = images.iter().map(|i| i.matched.len() + i.missed.len()).sum();
    let n_matched: usize = images.iter().map(|i| i.matched.len()).sum();
    let n_submitted: usize = images.iter().map(|i| i.matched.len() + i.spurious.len()).sum();
    let iou_sum: f64 = images
        .iter()
        .flat_map(|i| i.matched.iter().map(|m| m.iou))
        .sum();

    let recall = if n_ground_truth == 0 {
        1.0
    } else {
        n_matched as f64 / n_ground_truth as f64
    };
    let precision = if n_submitted == 0 {
        1.0
    } else {
        n_matched as f64 / n_submitted as f64
    };
    // With nothing to match on either side the exam is vacuously clean.
    let mean_iou = if n_matched > 0 {
        iou_sum / n_matched as f64
    } else if n_ground_truth == 0 && n_submitted == 0 {
        1.0
    } else {
        0.0
    };

    let mut failures = Vec::new();
    if recall < config.min_recall {
        failures.push(format!("recall {recall:.4} is below {}", config.min_recall));
    }
    if precision < config.min_precision {
        failures.push(format!(
            "precision {precision:.4} is below {}",
            config.min_precision
        ));
    }
    if mean_iou < config.min_mean_iou {
        failures.push(format!(
            "mean IoU {mean_iou:.4} is below {}",
            config.min_mean_iou
        ));
    }

    Ok(ExamReport {
        images,
        aggregates: ExamAggregates {
            n_ground_truth,
            n_submitted,
            n_matched,
            recall,
            precision,
            mean_iou,
        },
        verdict: ExamVerdict {
            pass: failures.is_empty(),
            failures,
        },
    })
}

fn grade_image(
    name: &str,
    submission: &AnnotatedImage,
    ground_truth: &AnnotatedImage,
    config: &ExamConfig,
) -> ImageExam {
    let gt_objects = ground_truth.objects();
    let sub_objects = submission.objects();

    let mut candidates = Vec::new();
    for (g, gt) in gt_objects.iter().enumerate() {
        for (s, sub) in sub_objects.iter().enumerate() {
            let overlap = iou(gt.bbox(), sub.bbox());
            if overlap >= config.match_iou {
                candidates.push((g, s, overlap));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .expect("IoU is never NaN")
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut gt_used = vec![false; gt_objects.len()];
    let mut sub_used = vec![false; sub_objects.len()];
    let mut matched = Vec::new();
    for (g, s, overlap) in candidates {
        if !gt_used[g] && !sub_used[s] {
            gt_used[g] = true;
            sub_used[s] = true;
            matched.push(MatchedPair {
                gt_index: g,
                sub_index: s,
                iou: overlap,
            });
        }
    }
    matched.sort_by_key(|m| m.gt_index);

    let missed: Vec<usize> = (0..gt_objects.len()).filter(|&g| !gt_used[g]).collect();
    let spurious: Vec<usize> = (0..sub_objects.len()).filter(|&s| !sub_used[s]).collect();

    let mut misclassified = Vec::new();
    let mut tag_mismatches = Vec::new();
    for pair in &matched {
        let gt = &gt_objects[pair.gt_index];
        let sub = &sub_objects[pair.sub_index];
        if gt.cls != sub.cls {
            misclassified.push(ClassMismatch {
                gt_index: pair.gt_index,
                sub_index: pair.sub_index,
                expected: gt.cls,
                got: sub.cls,
            });
        }
        if gt.tags != sub.tags {
            tag_mismatches.push(TagMismatch {
                gt_index: pair.gt_index,
                sub_index: pair.sub_index,
                missing: gt.tags.difference(&sub.tags).copied().collect(),
                extra: sub.tags.difference(&gt.tags).copied().collect(),
            });
        }
    }

    ImageExam {
        image_ref: name.to_owned(),
        matched,
        missed,
        spurious,
        misclassified,
        tag_mismatches,
    }
}

/// Human-readable summary with one line per noteworthy object.
pub fn render_exam_text(report: &ExamReport) -> String {
    let mut out = String::new();
    let a = &report.aggregates;
    writeln!(
        out,
        "verdict: {}",
        if report.verdict.pass { "PASS" } else { "FAIL" }
    )
    .unwrap();
    for failure in &report.verdict.failures {
        writeln!(out, "  bar not met: {failure}").unwrap();
    }
    writeln!(
        out,
        "matched {}/{} ground-truth boxes ({} submitted); recall {:.4}, precision {:.4}, mean IoU {:.4}",
        a.n_matched, a.n_ground_truth, a.n_submitted, a.recall, a.precision, a.mean_iou
    )
    .unwrap();
    for image in &report.images {
        let quiet = image.missed.is_empty()
            && image.spurious.is_empty()
            && image.misclassified.is_empty()
            && image.tag_mismatches.is_empty();
        if quiet {
            continue;
        }
        writeln!(out, "{}:", image.image_ref).unwrap();
        for g in &image.missed {
            writeln!(out, "  missed ground-truth object {g}").unwrap();
        }
        for s in &image.spurious {
            writeln!(out, "  spurious submission object {s}").unwrap();
        }
        for m in &image.misclassified {
            writeln!(
                out,
                "  object {} labeled {} but ground truth says {}",
                m.sub_index,
                m.got.name(),
                m.expected.name()
            )
            .unwrap();
        }
        for t in &image.tag_mismatches {
            let missing: Vec<&str> = t.missing.iter().map(|t| t.name()).collect();
            let extra: Vec<&str> = t.extra.iter().map(|t| t.name()).collect();
            writeln!(
                out,
                "  object {} tag mismatch (missing: [{}], extra: [{}])",
                t.sub_index,
                missing.join(", "),
                extra.join(", ")
            )
            .unwrap();
        }
    }
    out
}
