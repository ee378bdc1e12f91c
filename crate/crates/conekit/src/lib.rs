//! Curation and QA toolkit for traffic-cone detection datasets.
//!
//! The crate is organised around a small shared domain model ([`core`]) and
//! independent feature modules on top of it:
//!
//! * [`formats`]: parse/write annotation documents in the supported label
//!   formats, convert between them, and validate on-disk dataset layout.
//! * [`similarity`]: deterministic image feature extraction, cosine
//!   similarity matrices, duplicate scoring and diverse subset sampling.
//! * [`quality`]: label sanity rules, labeling-exam grading against ground
//!   truth, and dataset contribution checks.
//! * [`stats`]: dataset composition statistics.
//! * [`eval`]: detector evaluation (greedy matching, average precision,
//!   IoU threshold sweeps).
//! * [`imaging`]: raster IO, watermark-border cropping (with annotation
//!   adjustment) and annotation rendering.
//!
//! Everything in here is deterministic: given the same inputs and
//! configuration, every public function produces bit-identical results, no
//! matter how many worker threads the ambient rayon pool has.

pub mod core;
pub mod eval;
pub mod formats;
pub mod imaging;
pub mod quality;
pub mod similarity;
pub mod stats;
