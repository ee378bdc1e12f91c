//! Sanity rules over annotations.
//!
//! The rule set is closed:
//!
//! * `tiny_box`: box area below `min_box_area` or a side below
//!   `min_box_side` (accidental micro-boxes),
//! * `out_of_bounds`: box not fully inside the image,
//! * `zero_area`: corners that do not form a valid box,
//! * `unknown_class`: class name outside the taxonomy,
//! * `duplicate_object`: two same-class boxes with IoU above
//!   `duplicate_iou`,
//! * `orphan_pair`: image without annotation or vice versa (tree scans),
//! * `dim_mismatch`: document size differing from the actual image file.
//!
//! [`sanity_check`] covers in-memory annotations (which by construction
//! cannot violate `zero_area`, `unknown_class`, `orphan_pair` or
//! `dim_mismatch`); [`sanity_scan_tree`] covers a dataset directory
//! leniently, turning per-object geometry faults into findings instead of
//! parse errors. Findings report severity; gating is the caller's policy.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::core::{AnnotatedImage, BoundingBox, ConeClass, iou};
use crate::formats::layout::{
    validate_layout, DatasetLayout, LayoutConfig, LayoutFinding, LayoutFindingKind,
};
use crate::formats::{FormatId, RawObject};
use crate::imaging::read_dimensions;
use crate::quality::QualityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SanityRule {
    TinyBox,
    OutOfBounds,
    ZeroArea,
    UnknownClass,
    DuplicateObject,
    OrphanPair,
    DimMismatch,
}

impl SanityRule {
    pub fn name(self) -> &'static str {
        match self {
            SanityRule::TinyBox => "tiny_box",
            SanityRule::OutOfBounds => "out_of_bounds",
            SanityRule::ZeroArea => "zero_area",
            SanityRule::UnknownClass => "unknown_class",
            SanityRule::DuplicateObject => "duplicate_object",
            SanityRule::OrphanPair => "orphan_pair",
            SanityRule::DimMismatch => "dim_mismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanityFinding {
    pub image_ref: String,
    pub object_index: Option<usize>,
    pub rule: SanityRule,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SanityConfig {
    pub min_box_area: f64,
    pub min_box_side: f64,
    pub duplicate_iou: f64,
}

impl Default for SanityConfig {
    fn default() -> Self {
        SanityConfig {
            min_box_area: 25.0,
            min_box_side: 3.0,
            duplicate_iou: 0.9,
        }
    }
}

impl SanityConfig {
    fn validate(&self) -> Result<(), QualityError> {
        if !(self.min_box_area > 0.0 && self.min_box_area.is_finite()) {
            return Err(QualityError::Config(format!(
                "min_box_area must be positive, got {}",
                self.min_box_area
            )));
        }
        if !(self.min_box_side > 0.0 && self.min_box_side.is_finite()) {
            return Err(QualityError::Config(format!(
                "min_box_side must be positive, got {}",
                self.min_box_side
            )));
        }
        if !(self.duplicate_iou > 0.0 && self.duplicate_iou <= 1.0) {
            return Err(QualityError::Config(format!(
                "duplicate_iou must be in (0, 1], got {}",
                self.duplicate_iou
            )));
        }
        Ok(())
    }
}

/// One object as the rule engine sees it, decoupled from whether it came
/// from a validated annotation or a raw document.
struct ObjectView {
    class_name: String,
    corners: [f64; 4],
    /// `None` when the corners are not a valid box.
    bbox: Option<BoundingBox>,
}

impl ObjectView {
    fn from_labeled(obj: &crate::core::LabeledObject) -> Self {
        let b = obj.bbox();
        ObjectView {
            class_name: obj.cls.name().to_owned(),
            corners: [b.x_min(), b.y_min(), b.x_max(), b.y_max()],
            bbox: Some(*b),
        }
    }

    fn from_raw(obj: &RawObject) -> Self {
        let corners = match (obj.corners, &obj.mask) {
            (Some(corners), _) => corners,
            (None, Some((exterior, _))) => hull_corners(exterior),
            (None, None) => [f64::NAN; 4],
        };
        ObjectView {
            class_name: obj.class_name.clone(),
            corners,
            bbox: BoundingBox::new(corners[0], corners[1], corners[2], corners[3]).ok(),
        }
    }

    /// Class used for same-class rules; unknown names count as `other`,
    /// matching how parsing resolves them.
    fn resolved_class(&self) -> ConeClass {
        ConeClass::from_name(&self.class_name).unwrap_or(ConeClass::Other)
    }
}

fn hull_corners(ring: &[[f64; 2]]) -> [f64; 4] {
    let mut c = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    for p in ring {
        c[0] = c[0].min(p[0]);
        c[1] = c[1].min(p[1]);
        c[2] = c[2].max(p[0]);
        c[3] = c[3].max(p[1]);
    }
    c
}

/// The shared rule engine. `dims` is the size annotations are expressed
/// against. Findings come out sorted by (object index, rule).
fn check_objects(
    image_ref: &str,
    objects: &[ObjectView],
    dims: (u32, u32),
    config: &SanityConfig,
) -> Vec<SanityFinding> {
    let mut findings = Vec::new();
    let (width, height) = dims;
    for (index, obj) in objects.iter().enumerate() {
        if ConeClass::from_name(&obj.class_name).is_none() {
            findings.push(SanityFinding {
                image_ref: image_ref.to_owned(),
                object_index: Some(index),
                rule: SanityRule::UnknownClass,
                severity: Severity::Warning,
                message: format!("class `{}` is outside the taxonomy", obj.class_name),
            });
        }
        let Some(bbox) = obj.bbox else {
            let [x0, y0, x1, y1] = obj.corners;
            findings.push(SanityFinding {
                image_ref: image_ref.to_owned(),
                object_index: Some(index),
                rule: SanityRule::ZeroArea,
                severity: Severity::Error,
                message: format!("corners ({x0}, {y0}, {x1}, {y1}) do not form a box with positive area"),
            });
            continue;
        };
        if bbox.area() < config.min_box_area
            || bbox.width() < config.min_box_side
            || bbox.height() < config.min_box_side
        {
            findings.push(SanityFinding {
                image_ref: image_ref.to_owned(),
                object_index: Some(index),
                rule: SanityRule::TinyBox,
                severity: Severity::Error,
                message: format!(
                    "box is {:.1}x{:.1} px (area {:.1}); minimum is {} px sides and {} px^2 area",
                    bbox.width(),
                    bbox.height(),
                    bbox.area(),
                    config.min_box_side,
                    config.min_box_area
                ),
            });
        }
        if !bbox.inside_image(width, height) {
            findings.push(SanityFinding {
                image_ref: image_ref.to_owned(),
                object_index: Some(index),
                rule: SanityRule::OutOfBounds,
                severity: Severity::Error,
                message: format!(
                    "box ({}, {}, {}, {}) extends outside the {width}x{height} image",
                    bbox.x_min(),
                    bbox.y_min(),
                    bbox.x_max(),
                    bbox.y_max()
                ),
            });
        }
    }

    for j in 1..objects.len() {
        let Some(bj) = objects[j].bbox else { continue };
        for (i, prev) in objects[..j].iter().enumerate() {
            let Some(bi) = prev.bbox else { continue };
            if prev.resolved_class() == objects[j].resolved_class()
                && iou(&bi, &bj) > config.duplicate_iou
            {
                findings.push(SanityFinding {
                    image_ref: image_ref.to_owned(),
                    object_index: Some(j),
                    rule: SanityRule::DuplicateObject,
                    severity: Severity::Warning,
                    message: format!(
                        "same-class box overlaps object {i} with IoU {:.3} (> {})",
                        iou(&bi, &bj),
                        config.duplicate_iou
                    ),
                });
            }
        }
    }

    sort_findings(&mut findings);
    findings
}

fn sort_findings(findings: &mut [SanityFinding]) {
    findings.sort_by(|a, b| {
        (&a.image_ref, a.object_index, a.rule, &a.message).cmp(&(
            &b.image_ref,
            b.object_index,
            b.rule,
            &b.message,
        ))
    });
}

/// Runs the per-object rules over in-memory annotations. Findings are
/// sorted by (image, object index, rule).
pub fn sanity_check(
    dataset: &[AnnotatedImage],
    config: &SanityConfig,
) -> Result<Vec<SanityFinding>, QualityError> {
    config.validate()?;
    let per_image: Vec<Vec<SanityFinding>> = dataset
        .par_iter()
        .map(|image| {
            let views: Vec<ObjectView> =
                image.objects().iter().map(ObjectView::from_labeled).collect();
            check_objects(&image.name, &views, (image.width(), image.height()), config)
        })
        .collect();
    let mut findings: Vec<SanityFinding> = per_image.into_iter().flatten().collect();
    sort_findings(&mut findings);
    Ok(findings)
}

/// A file that could not be read or parsed during a tree scan.
#[derive(Debug, Clone, Serialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SanityReport {
    /// Image/annotation pairs that were actually checked.
    pub n_images: usize,
    pub findings: Vec<SanityFinding>,
    /// Layout problems other than orphan pairs (those become findings).
    pub layout_findings: Vec<LayoutFinding>,
    pub file_errors: Vec<FileError>,
}

impl SanityReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty() && self.layout_findings.is_empty() && self.file_errors.is_empty()
    }
}

/// Scans a dataset tree: layout validation plus lenient per-annotation
/// rule checks. Annotations are read as supervisely-like documents.
/// Object-level geometry faults become findings; only unreadable or
/// unparseable files land in `file_errors`.
pub fn sanity_scan_tree(
    root: &Path,
    layout_config: &LayoutConfig,
    config: &SanityConfig,
) -> Result<SanityReport, QualityError> {
    config.validate()?;
    let (layout, raw_layout_findings) = validate_layout(root, layout_config)?;

    let mut findings = Vec::new();
    let mut layout_findings = Vec::new();
    for finding in raw_layout_findings {
        match finding.kind {
            LayoutFindingKind::OrphanImage | LayoutFindingKind::OrphanAnnotation => {
                findings.push(SanityFinding {
                    image_ref: finding.path.clone(),
                    object_index: None,
                    rule: SanityRule::OrphanPair,
                    severity: Severity::Error,
                    message: finding.message,
                })
            }
            _ => layout_findings.push(finding),
        }
    }

    let results: Vec<(Vec<SanityFinding>, Vec<FileError>)> =
        scan_pairs(&layout, config);
    let mut file_errors = Vec::new();
    for (pair_findings, pair_errors) in results {
        findings.extend(pair_findings);
        file_errors.extend(pair_errors);
    }

    sort_findings(&mut findings);
    file_errors.sort_by(|a, b| (&a.path, &a.message).cmp(&(&b.path, &b.message)));
    Ok(SanityReport {
        n_images: layout.pairs.len(),
        findings,
        layout_findings,
        file_errors,
    })
}

fn scan_pairs(
    layout: &DatasetLayout,
    config: &SanityConfig,
) -> Vec<(Vec<SanityFinding>, Vec<FileError>)> {
    layout
        .pairs
        .par_iter()
        .map(|pair| {
            let image_ref = pair.name.render();
            let mut findings = Vec::new();
            let mut errors = Vec::new();

            let bytes = match std::fs::read(&pair.annotation_path) {
                Ok(bytes) => bytes,
                Err(e) => {
                    errors.push(FileError {
                        path: pair.annotation_path.display().to_string(),
                        message: e.to_string(),
                    });
                    return (findings, errors);
                }
            };
            let raw = match crate::formats::parse_raw(FormatId::SuperviselyLike, &bytes, None) {
                Ok(raw) => raw,
                Err(e) => {
                    errors.push(FileError {
                        path: pair.annotation_path.display().to_string(),
                        message: e.to_string(),
                    });
                    return (findings, errors);
                }
            };
            let doc_size = raw.size.expect("supervisely documents always carry a size");

            match read_dimensions(&pair.image_path) {
                Ok(actual) if actual != doc_size => findings.push(SanityFinding {
                    image_ref: image_ref.clone(),
                    object_index: None,
                    rule: SanityRule::DimMismatch,
                    severity: Severity::Error,
                    message: format!(
                        "annotation says {}x{}, image file is {}x{}",
                        doc_size.0, doc_size.1, actual.0, actual.1
                    ),
                }),
                Ok(_) => {}
                Err(e) => errors.push(FileError {
                    path: pair.image_path.display().to_string(),
                    message: e.to_string(),
                }),
            }

            // Objects are judged against the size the annotation was made
            // for; a dim_mismatch finding already covers the discrepancy.
            let views: Vec<ObjectView> = raw.objects.iter().map(ObjectView::from_raw).collect();
            findings.extend(check_objects(&image_ref, &views, doc_size, config));
            (findings, errors)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::LabeledObject;

    fn image_with_boxes(name: &str, dims: (u32, u32), boxes: &[(ConeClass, [f64; 4])]) -> AnnotatedImage {
        let objects = boxes
            .iter()
            .map(|(cls, [x0, y0, x1, y1])| {
                LabeledObject::new(
                    *cls,
                    BoundingBox::new(*x0, *y0, *x1, *y1).unwrap(),
                    None,
                    Default::default(),
                )
                .unwrap()
            })
            .collect();
        AnnotatedImage::new(name, dims.0, dims.1, objects, Default::default()).unwrap()
    }

    fn rules(findings: &[SanityFinding]) -> Vec<SanityRule> {
        findings.iter().map(|f| f.rule).collect()
    }

    #[test]
    fn clean_annotations_produce_no_findings() {
        let image = image_with_boxes(
            "a",
            (100, 100),
            &[
                (ConeClass::Blue, [10.0, 10.0, 30.0, 40.0]),
                (ConeClass::Yellow, [50.0, 50.0, 70.0, 90.0]),
            ],
        );
        assert!(sanity_check(&[image], &SanityConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn tiny_boxes_are_flagged_by_area_or_side() {
        let image = image_with_boxes(
            "a",
            (100, 100),
            &[
                (ConeClass::Blue, [0.0, 0.0, 4.0, 4.0]),   // area 16 < 25
                (ConeClass::Blue, [10.0, 10.0, 12.0, 40.0]), // side 2 < 3
                (ConeClass::Blue, [50.0, 50.0, 56.0, 56.0]), // area 36, sides 6: fine
            ],
        );
        let findings = sanity_check(&[image], &SanityConfig::default()).unwrap();
        assert_eq!(rules(&findings), vec![SanityRule::TinyBox, SanityRule::TinyBox]);
        assert_eq!(findings[0].object_index, Some(0));
        assert_eq!(findings[1].object_index, Some(1));
    }

    #[test]
    fn out_of_bounds_box_is_flagged() {
        let image = image_with_boxes("a", (100, 100), &[(ConeClass::Blue, [-5.0, 0.0, 10.0, 10.0])]);
        let findings = sanity_check(&[image], &SanityConfig::default()).unwrap();
        assert_eq!(rules(&findings), vec![SanityRule::OutOfBounds]);
        assert!(findings[0].message.contains("-5"));
    }

    #[test]
    fn near_identical_same_class_boxes_are_duplicates() {
        let image = image_with_boxes(
            "a",
            (100, 100),
            &[
                (ConeClass::Blue, [10.0, 10.0, 30.0, 30.0]),
                (ConeClass::Blue, [10.0, 10.0, 30.0, 29.0]), // IoU 0.95
                (ConeClass::Yellow, [10.0, 10.0, 30.0, 29.5]), // other class: not a duplicate
            ],
        );
        let findings = sanity_check(&[image], &SanityConfig::default()).unwrap();
        assert_eq!(rules(&findings), vec![SanityRule::DuplicateObject]);
        assert_eq!(findings[0].object_index, Some(1));
        assert!(findings[0].message.contains("object 0"));
    }

    #[test]
    fn duplicate_threshold_is_strict() {
        // IoU exactly at the threshold must not fire.
        let image = image_with_boxes(
            "a",
            (100, 100),
            &[
                (ConeClass::Blue, [0.0, 0.0, 20.0, 10.0]),
                (ConeClass::Blue, [0.0, 0.0, 20.0, 10.0]),
            ],
        );
        let cfg = SanityConfig {
            duplicate_iou: 1.0,
            ..SanityConfig::default()
        };
        assert!(sanity_check(std::slice::from_ref(&image), &cfg).unwrap().is_empty());
        assert_eq!(
            rules(&sanity_check(&[image], &SanityConfig::default()).unwrap()),
            vec![SanityRule::DuplicateObject]
        );
    }

    #[test]
    fn unrelated_rule_thresholds_do_not_interact() {
        let image = image_with_boxes(
            "a",
            (100, 100),
            &[
                (ConeClass::Blue, [10.0, 10.0, 30.0, 30.0]),
                (ConeClass::Blue, [10.0, 10.0, 30.0, 29.0]),
            ],
        );
        let loose = SanityConfig::default();
        let tight = SanityConfig {
            min_box_area: 1000.0,
            min_box_side: 25.0,
            ..SanityConfig::default()
        };
        let dup = |cfg: &SanityConfig| {
            sanity_check(std::slice::from_ref(&image), cfg)
                .unwrap()
                .into_iter()
                .filter(|f| f.rule == SanityRule::DuplicateObject)
                .collect::<Vec<_>>()
        };
        assert_eq!(dup(&loose), dup(&tight));
    }

    #[test]
    fn findings_are_sorted_by_image_then_object_then_rule() {
        let b = image_with_boxes("b", (100, 100), &[(ConeClass::Blue, [0.0, 0.0, 2.0, 2.0])]);
        let a = image_with_boxes("a", (100, 100), &[(ConeClass::Blue, [-1.0, 0.0, 2.0, 2.0])]);
        let findings = sanity_check(&[b, a], &SanityConfig::default()).unwrap();
        assert_eq!(findings[0].image_ref, "a");
        // Object 0 of image `a` violates both tiny_box and out_of_bounds,
        // in rule order.
        assert_eq!(
            rules(&findings),
            vec![
                SanityRule::TinyBox,
                SanityRule::OutOfBounds,
                SanityRule::TinyBox
            ]
        );
    }

    #[test]
    fn engine_flags_raw_zero_area_and_unknown_class() {
        let views = vec![
            ObjectView {
                class_name: "green_cone".into(),
                corners: [10.0, 20.0, 10.0, 60.0],
                bbox: None,
            },
        ];
        let findings = check_objects("x", &views, (100, 100), &SanityConfig::default());
        assert_eq!(
            rules(&findings),
            vec![SanityRule::ZeroArea, SanityRule::UnknownClass]
        );
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let bad = SanityConfig {
            duplicate_iou: 0.0,
            ..SanityConfig::default()
        };
        assert!(matches!(
            sanity_check(&[], &bad),
            Err(QualityError::Config(_))
        ));
    }
}
