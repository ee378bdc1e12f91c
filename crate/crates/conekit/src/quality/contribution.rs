//! Contribution acceptance check for incoming datasets.
//!
//! A dataset is accepted when both requirements hold:
//! at least half of its images were recorded onboard, and its duplicate
//! score at a high similarity threshold stays under a cap.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::core::AnnotatedImage;
use crate::quality::QualityError;
use crate::similarity::{duplicate_scores, FeatureVector, MatrixConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ContributionConfig {
    /// Minimum fraction of onboard-recorded images; the bound itself
    /// passes.
    pub min_onboard_ratio: f64,
    /// Threshold at which the duplicate score is taken.
    pub duplicate_threshold: f64,
    /// Maximum allowed duplicate score; the bound itself passes.
    pub max_duplicate_score: f64,
    pub matrix: MatrixConfig,
}

impl Default for ContributionConfig {
    fn default() -> Self {
        ContributionConfig {
            min_onboard_ratio: 0.5,
            duplicate_threshold: 0.99,
            max_duplicate_score: 5.0,
            matrix: MatrixConfig::default(),
        }
    }
}

impl ContributionConfig {
    fn validate(&self) -> Result<(), QualityError> {
        if !(0.0..=1.0).contains(&self.min_onboard_ratio) {
            return Err(QualityError::Config(format!(
                "min_onboard_ratio must be in [0, 1], got {}",
                self.min_onboard_ratio
            )));
        }
        if !(self.duplicate_threshold > 0.0 && self.duplicate_threshold <= 1.0) {
            return Err(QualityError::Config(format!(
                "duplicate_threshold must be in (0, 1], got {}",
                self.duplicate_threshold
            )));
        }
        if self.max_duplicate_score.is_nan() || self.max_duplicate_score < 0.0 {
            return Err(QualityError::Config(format!(
                "max_duplicate_score must be non-negative, got {}",
                self.max_duplicate_score
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RequirementCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContributionReport {
    pub n_images: usize,
    pub n_onboard: usize,
    pub onboard_ratio: f64,
    pub duplicate_threshold: f64,
    pub duplicate_score: f64,
    pub checks: Vec<RequirementCheck>,
    pub accepted: bool,
}

/// Checks one contributed dataset. `features` must carry exactly one
/// vector per annotated image (matched by name) and every image must
/// declare its recording context via the boolean `onboard` scene-meta
/// key.
pub fn check_contribution(
    images: &[AnnotatedImage],
    features: &[FeatureVector],
    config: &ContributionConfig,
) -> Result<ContributionReport, QualityError> {
    config.validate()?;
    if images.is_empty() {
        return Err(QualityError::EmptyDataset);
    }

    let mut feature_names = BTreeSet::new();
    for f in features {
        if !feature_names.insert(f.image_ref()) {
            return Err(QualityError::DuplicateFeature(f.image_ref().to_owned()));
        }
    }
    let mut image_names = BTreeSet::new();
    let mut n_onboard = 0usize;
    for image in images {
        if !image_names.insert(image.name.as_str()) {
            return Err(QualityError::DuplicateImage {
                name: image.name.clone(),
                side: "the contribution",
            });
        }
        if !feature_names.contains(image.name.as_str()) {
            return Err(QualityError::MissingFeature(image.name.clone()));
        }
        match image.onboard() {
            Some(true) => n_onboard += 1,
            Some(false) => {}
            None => return Err(QualityError::MissingOnboard(image.name.clone())),
        }
    }

    let onboard_ratio = n_onboard as f64 / images.len() as f64;
    let score = duplicate_scores(features, &[config.duplicate_threshold], &config.matrix)?[0];

    let checks = vec![
        RequirementCheck {
            name: "onboard_ratio",
            value: onboard_ratio,
            bound: config.min_onboard_ratio,
            pass: onboard_ratio >= config.min_onboard_ratio,
            detail: format!(
                "{n_onboard} of {} images recorded onboard",
                images.len()
            ),
        },
        RequirementCheck {
            name: "duplicate_score",
            value: score,
            bound: config.max_duplicate_score,
            pass: score <= config.max_duplicate_score,
            detail: format!(
                "duplicate score {score} at threshold {}",
                config.duplicate_threshold
            ),
        },
    ];

    let accepted = checks.iter().all(|c| c.pass);
    Ok(ContributionReport {
        n_images: images.len(),
        n_onboard,
        onboard_ratio,
        duplicate_threshold: config.duplicate_threshold,
        duplicate_score: score,
        checks,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn image(name: &str, onboard: Option<bool>) -> AnnotatedImage {
        let mut meta = BTreeMap::new();
        if let Some(flag) = onboard {
            meta.insert("onboard".to_string(), serde_json::Value::Bool(flag));
        }
        AnnotatedImage::new(name, 100, 100, vec![], meta).unwrap()
    }

    fn feature(name: &str, seed: u32) -> FeatureVector {
        // Distinct directions per seed: nowhere near the 0.99 threshold.
        let angle = seed as f32;
        FeatureVector::new(name, vec![angle.cos(), angle.sin()]).unwrap()
    }

    #[test]
    fn clean_contribution_is_accepted() {
        let images = vec![
            image("t_00001.png", Some(true)),
            image("t_00002.png", Some(true)),
            image("t_00003.png", Some(false)),
        ];
        let features: Vec<FeatureVector> = (0..3)
            .map(|i| feature(&format!("t_{:05}.png", i + 1), i))
            .collect();
        let report =
            check_contribution(&images, &features, &ContributionConfig::default()).unwrap();
        assert!(report.accepted);
        assert_eq!(report.n_onboard, 2);
        assert_eq!(report.duplicate_score, 0.0);
        assert!(report.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn onboard_ratio_boundary_passes() {
        let images = vec![
            image("t_00001.png", Some(true)),
            image("t_00002.png", Some(false)),
        ];
        let features: Vec<FeatureVector> = (0..2)
            .map(|i| feature(&format!("t_{:05}.png", i + 1), i))
            .collect();
        let report =
            check_contribution(&images, &features, &ContributionConfig::default()).unwrap();
        assert_eq!(report.onboard_ratio, 0.5);
        assert!(report.accepted, "exactly half onboard still passes");
    }

    #[test]
    fn too_few_onboard_images_fail() {
        let images = vec![
            image("t_00001.png", Some(true)),
            image("t_00002.png", Some(false)),
            image("t_00003.png", Some(false)),
        ];
        let features: Vec<FeatureVector> = (0..3)
            .map(|i| feature(&format!("t_{:05}.png", i + 1), i))
            .collect();
        let report =
            check_contribution(&images, &features, &ContributionConfig::default()).unwrap();
        assert!(!report.accepted);
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, vec!["onboard_ratio"]);
    }

    #[test]
    fn duplicate_heavy_contribution_fails() {
        // Seven copies of the same direction: every image has 6 near
        // duplicates, well over the default cap of 5.
        let images: Vec<AnnotatedImage> = (1..=7)
            .map(|i| image(&format!("t_{i:05}.png"), Some(true)))
            .collect();
        let features: Vec<FeatureVector> = (1..=7)
            .map(|i| feature(&format!("t_{i:05}.png"), 0))
            .collect();
        let report =
            check_contribution(&images, &features, &ContributionConfig::default()).unwrap();
        assert_eq!(report.duplicate_score, 6.0);
        assert!(!report.accepted);
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, vec!["duplicate_score"]);
    }

    #[test]
    fn missing_onboard_flag_is_an_error() {
        let images = vec![image("t_00001.png", None)];
        let features = vec![feature("t_00001.png", 0)];
        assert!(matches!(
            check_contribution(&images, &features, &ContributionConfig::default()),
            Err(QualityError::MissingOnboard(name)) if name == "t_00001.png"
        ));
    }

    #[test]
    fn missing_or_duplicate_features_are_errors() {
        let images = vec![image("t_00001.png", Some(true))];
        assert!(matches!(
            check_contribution(&images, &[], &ContributionConfig::default()),
            Err(QualityError::MissingFeature(name)) if name == "t_00001.png"
        ));
        let features = vec![feature("t_00001.png", 0), feature("t_00001.png", 1)];
        assert!(matches!(
            check_contribution(&images, &features, &ContributionConfig::default()),
            Err(QualityError::DuplicateFeature(name)) if name == "t_00001.png"
        ));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(matches!(
            check_contribution(&[], &[], &ContributionConfig::default()),
            Err(QualityError::EmptyDataset)
        ));
    }
}
