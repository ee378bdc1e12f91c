//! Label quality tooling: sanity rules over annotations, labeling-exam
//! grading against ground truth, and dataset contribution checks.

pub mod contribution;
pub mod exam;
pub mod sanity;

use thiserror::Error;

use crate::formats::FormatError;
use crate::imaging::ImagingError;
use crate::similarity::SimilarityError;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("submission and ground truth cover different images (missing from submission: {missing:?}; extra in submission: {extra:?})")]
    NameSetMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("duplicate image name `{name}` in {side}")]
    DuplicateImage { name: String, side: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("image `{0}` has no boolean `onboard` flag in its scene metadata")]
    MissingOnboard(String),
    #[error("no feature vector named `{0}`")]
    MissingFeature(String),
    #[error("duplicate feature vector name `{0}`")]
    DuplicateFeature(String),
    #[error("the dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}
