//! Dataset statistics: cone counts per class and tag, class-presence
//! combinations, and histograms of per-image object counts and relative
//! box areas.
//!
//! `other_cone` objects are excluded unless [`StatsConfig::include_other`]
//! is set; class-presence histograms always range over the four main
//! colours only.
//!
//! Aggregation runs in parallel over images but reduces fixed-size integer
//! partials with commutative additions, so reports are identical for any
//! worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::core::{AnnotatedImage, ConeClass, ObjectTag};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("the dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsConfig {
    /// Count `other_cone` objects too. Class-presence histograms stay
    /// restricted to the main colours either way.
    pub include_other: bool,
    /// Class combinations seen on fewer than this fraction of images are
    /// folded into an `other` row.
    pub combination_min_fraction: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            include_other: false,
            combination_min_fraction: 0.01,
        }
    }
}

impl StatsConfig {
    fn validate(&self) -> Result<(), StatsError> {
        if !(0.0..=1.0).contains(&self.combination_min_fraction) {
            return Err(StatsError::Config(format!(
                "combination_min_fraction must be in [0, 1], got {}",
                self.combination_min_fraction
            )));
        }
        Ok(())
    }
}

const OBJECT_BUCKET_WIDTH: usize = 5;
const OBJECT_BUCKETS: usize = 21;
/// Upper edges of the relative-area buckets; the last regular bucket
/// closes at 1 inclusive, anything above lands in `>1`.
const AREA_EDGES: [f64; 6] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
const AREA_BUCKETS: usize = AREA_EDGES.len() + 1;
const MAIN_BITS: usize = 1 << ConeClass::MAIN.len();

/// Fixed-size integer tallies for one slice of the dataset. Addition is
/// commutative, so parallel reduction order cannot change the result.
#[derive(Debug, Clone)]
struct Partial {
    n_images: u64,
    n_cones: u64,
    class_counts: [u64; 5],
    tag_counts: [u64; 3],
    combination_counts: [u64; MAIN_BITS],
    objects_per_image: [u64; OBJECT_BUCKETS],
    area_buckets: [u64; AREA_BUCKETS],
}

impl Partial {
    fn zero() -> Self {
        Partial {
            n_images: 0,
            n_cones: 0,
            class_counts: [0; 5],
            tag_counts: [0; 3],
            combination_counts: [0; MAIN_BITS],
            objects_per_image: [0; OBJECT_BUCKETS],
            area_buckets: [0; AREA_BUCKETS],
        }
    }

    fn add(mut self, other: Partial) -> Self {
        self.n_images += other.n_images;
        self.n_cones += other.n_cones;
        for (a, b) in self.class_counts.iter_mut().zip(other.class_counts) {
            *a += b;
        }
        for (a, b) in self.tag_counts.iter_mut().zip(other.tag_counts) {
            *a += b;
        }
        for (a, b) in self
            .combination_counts
            .iter_mut()
            .zip(other.combination_counts)
        {
            *a += b;
        }
        for (a, b) in self.objects_per_image.iter_mut().zip(other.objects_per_image) {
            *a += b;
        }
        for (a, b) in self.area_buckets.iter_mut().zip(other.area_buckets) {
            *a += b;
        }
        self
    }
}

fn object_bucket(count: usize) -> usize {
    (count / OBJECT_BUCKET_WIDTH).min(OBJECT_BUCKETS - 1)
}

fn object_bucket_label(bucket: usize) -> String {
    if bucket == OBJECT_BUCKETS - 1 {
        "100+".to_string()
    } else {
        let lo = bucket * OBJECT_BUCKET_WIDTH;
        format!("{lo}-{}", lo + OBJECT_BUCKET_WIDTH - 1)
    }
}

fn area_bucket(relative_area: f64) -> usize {
    for (i, edge) in AREA_EDGES.iter().enumerate() {
        if relative_area < *edge {
            return i;
        }
    }
    if relative_area <= 1.0 {
        AREA_EDGES.len() - 1
    } else {
        AREA_EDGES.len()
    }
}

fn area_bucket_label(bucket: usize) -> String {
    if bucket == 0 {
        return format!("<{:e}", AREA_EDGES[0]);
    }
    if bucket == AREA_EDGES.len() {
        return ">1".to_string();
    }
    let lo = AREA_EDGES[bucket - 1];
    let hi = AREA_EDGES[bucket];
    if hi == 1.0 {
        format!("{lo:e}..1")
    } else {
        format!("{lo:e}..{hi:e}")
    }
}

fn tally(image: &AnnotatedImage, include_other: bool) -> Partial {
    let mut p = Partial::zero();
    p.n_images = 1;
    let image_area = image.width() as f64 * image.height() as f64;
    let mut present_bits = 0usize;
    let mut counted = 0usize;
    for object in image.objects() {
        if let Some(main) = ConeClass::MAIN.iter().position(|c| *c == object.cls) {
            present_bits |= 1 << main;
        }
        if object.cls == ConeClass::Other && !include_other {
            continue;
        }
        counted += 1;
        p.class_counts[object.cls.index() as usize] += 1;
        for tag in &object.tags {
            p.tag_counts[ObjectTag::ALL.iter().position(|t| t == tag).unwrap()] += 1;
        }
        p.area_buckets[area_bucket(object.bbox().area() / image_area)] += 1;
    }
    p.n_cones = counted as u64;
    p.combination_counts[present_bits] = 1;
    p.objects_per_image[object_bucket(counted)] = 1;
    p
}

fn combination_label(bits: usize) -> String {
    if bits == 0 {
        return "none".to_string();
    }
    let names: Vec<&str> = ConeClass::MAIN
        .iter()
        .enumerate()
        .filter(|(i, _)| bits & (1 << i) != 0)
        .map(|(_, c)| c.short_name())
        .collect();
    names.join("+")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub key: String,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub n_images: u64,
    pub n_cones: u64,
    pub cones_per_image: f64,
    /// Count per class, all five classes always listed (zero when the
    /// class is excluded or absent).
    pub class_counts: BTreeMap<String, u64>,
    pub tag_counts: BTreeMap<String, u64>,
    /// Images by number of distinct main colours present, keys "0".."4".
    pub distinct_class_histogram: BTreeMap<String, u64>,
    /// Images by set of main colours present, most common first (ties by
    /// key); rare combinations are folded into a trailing `other` row.
    pub class_combinations: Vec<HistogramRow>,
    /// Images by counted-object bucket, ascending ("0-4" .. "95-99",
    /// "100+"); zero buckets are kept.
    pub objects_per_image: Vec<HistogramRow>,
    /// Counted objects by box area relative to image area, ascending;
    /// zero buckets are kept.
    pub relative_area: Vec<HistogramRow>,
}

pub fn dataset_stats(
    images: &[AnnotatedImage],
    config: &StatsConfig,
) -> Result<StatsReport, StatsError> {
    config.validate()?;
    if images.is_empty() {
        return Err(StatsError::EmptyDataset);
    }

    let total = images
        .par_iter()
        .map(|image| tally(image, config.include_other))
        .reduce(Partial::zero, Partial::add);

    let class_counts: BTreeMap<String, u64> = ConeClass::ALL
        .iter()
        .map(|c| (c.name().to_string(), total.class_counts[c.index() as usize]))
        .collect();
    let tag_counts: BTreeMap<String, u64> = ObjectTag::ALL
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name().to_string(), total.tag_counts[i]))
        .collect();

    let mut distinct = BTreeMap::new();
    for k in 0..=ConeClass::MAIN.len() {
        distinct.insert(k.to_string(), 0u64);
    }
    for (bits, count) in total.combination_counts.iter().enumerate() {
        *distinct.get_mut(&(bits.count_ones() as usize).to_string()).unwrap() += count;
    }

    let min_count = config.combination_min_fraction * total.n_images as f64;
    let mut combinations = Vec::new();
    let mut folded = 0u64;
    for (bits, count) in total.combination_counts.iter().enumerate() {
        if *count == 0 {
            continue;
        }
        if (*count as f64) < min_count {
            folded += count;
        } else {
            combinations.push(HistogramRow {
                key: combination_label(bits),
                count: *count,
            });
        }
    }
    combinations.sort_by(|a, b| b.count.cmp(&a.count).then(a.key.cmp(&b.key)));
    if folded > 0 {
        combinations.push(HistogramRow {
            key: "other".to_string(),
            count: folded,
        });
    }

    let objects_per_image = (0..OBJECT_BUCKETS)
        .map(|b| HistogramRow {
            key: object_bucket_label(b),
            count: total.objects_per_image[b],
        })
        .collect();
    let relative_area = (0..AREA_BUCKETS)
        .map(|b| HistogramRow {
            key: area_bucket_label(b),
            count: total.area_buckets[b],
        })
        .collect();

    Ok(StatsReport {
        n_images: total.n_images,
        n_cones: total.n_cones,
        cones_per_image: total.n_cones as f64 / total.n_images as f64,
        class_counts,
        tag_counts,
        distinct_class_histogram: distinct,
        class_combinations: combinations,
        objects_per_image,
        relative_area,
    })
}

/// CSV rendering: one `table,key,count` row per histogram entry, preceded
/// by the scalar totals.
pub fn stats_csv_tables(report: &StatsReport) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut row = |table: &str, key: &str, value: String| {
        writer
            .write_record([table, key, &value])
            .expect("in-memory CSV writes cannot fail");
    };
    row("table", "key", "value".to_string());
    row("totals", "n_images", report.n_images.to_string());
    row("totals", "n_cones", report.n_cones.to_string());
    row(
        "totals",
        "cones_per_image",
        format!("{}", report.cones_per_image),
    );
    for (key, count) in &report.class_counts {
        row("class_counts", key, count.to_string());
    }
    for (key, count) in &report.tag_counts {
        row("tag_counts", key, count.to_string());
    }
    for (key, count) in &report.distinct_class_histogram {
        row("distinct_classes", key, count.to_string());
    }
    for entry in &report.class_combinations {
        row("class_combinations", &entry.key, entry.count.to_string());
    }
    for entry in &report.objects_per_image {
        row("objects_per_image", &entry.key, entry.count.to_string());
    }
    for entry in &report.relative_area {
        row("relative_area", &entry.key, entry.count.to_string());
    }
    String::from_utf8(writer.into_inner().expect("in-memory CSV writes cannot fail"))
        .expect("CSV output is UTF-8")
}
