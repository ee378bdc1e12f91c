//! Property tests for exam grading and sanity-rule checking.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conekit::core::{AnnotatedImage, BoundingBox, ConeClass, LabeledObject, ObjectTag};
use conekit::quality::exam::{grade_exam, ExamConfig};
use conekit::quality::sanity::{sanity_check, SanityConfig};

type BoxSeed = (f64, f64, f64, f64, u8, u8);

fn arb_scene() -> impl Strategy<Value = (u32, u32, Vec<BoxSeed>)> {
    (
        200u32..1200,
        200u32..1200,
        proptest::collection::vec(
            (
                0.0f64..1.0,
                0.0f64..1.0,
                0.0f64..1.0,
                0.0f64..1.0,
                0u8..5,
                0u8..8,
            ),
            0..7,
        ),
    )
}

fn tag_set(bits: u8) -> BTreeSet<ObjectTag> {
    let mut tags = BTreeSet::new();
    if bits & 1 != 0 {
        tags.insert(ObjectTag::KnockedOver);
    }
    if bits & 2 != 0 {
        tags.insert(ObjectTag::Truncated);
    }
    if bits & 4 != 0 {
        tags.insert(ObjectTag::TapeRemovedOrSticker);
    }
    tags
}

/// Boxes fully inside the image with both sides at least 6 px.
fn clean_objects(width: u32, height: u32, seeds: &[BoxSeed]) -> Vec<LabeledObject> {
    let (w, h) = (width as f64, height as f64);
    seeds
        .iter()
        .map(|&(a, b, c, d, cls, tags)| {
            let x_min = a * (w - 6.0);
            let y_min = b * (h - 6.0);
            let bw = 6.0 + c * (w - x_min - 6.0);
            let bh = 6.0 + d * (h - y_min - 6.0);
            let bbox = BoundingBox::new(x_min, y_min, x_min + bw, y_min + bh).unwrap();
            let cls = ConeClass::from_index(u32::from(cls % 5)).unwrap();
            LabeledObject::new(cls, bbox, None, tag_set(tags)).unwrap()
        })
        .collect()
}

fn scenes_to_images(scenes: &[(u32, u32, Vec<BoxSeed>)]) -> Vec<AnnotatedImage> {
    scenes
        .iter()
        .enumerate()
        .map(|(i, (w, h, seeds))| {
            AnnotatedImage::new(
                format!("img_{i:03}"),
                *w,
                *h,
                clean_objects(*w, *h, seeds),
                BTreeMap::new(),
            )
            .unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn identical_submission_always_passes(
        scenes in proptest::collection::vec(arb_scene(), 1..6)
    ) {
        let gold = scenes_to_images(&scenes);
        let report = grade_exam(&gold, &gold, &ExamConfig::default()).unwrap();
        prop_assert_eq!(report.aggregates.recall, 1.0);
        prop_assert_eq!(report.aggregates.precision, 1.0);
        prop_assert_eq!(report.aggregates.mean_iou, 1.0);
        prop_assert!(report.verdict.pass);
        for image in &report.images {
            prop_assert!(image.missed.is_empty());
            prop_assert!(image.spurious.is_empty());
            prop_assert!(image.misclassified.is_empty());
            prop_assert!(image.tag_mismatches.is_empty());
        }
    }

    #[test]
    fn exam_counts_are_conserved(
        scenes in proptest::collection::vec(arb_scene(), 1..6),
        keep_mask in proptest::collection::vec(any::<bool>(), 0..42),
    ) {
        let gold = scenes_to_images(&scenes);
        // Submission = gold with a subset of objects dropped per image.
        let mut cursor = 0usize;
        let submission: Vec<AnnotatedImage> = gold
            .iter()
            .map(|image| {
                let kept: Vec<LabeledObject> = image
                    .objects()
                    .iter()
                    .filter(|_| {
                        let keep = keep_mask.get(cursor).copied().unwrap_or(true);
                        cursor += 1;
                        keep
                    })
                    .cloned()
                    .collect();
                AnnotatedImage::new(
                    image.name.clone(),
                    image.width(),
                    image.height(),
                    kept,
                    BTreeMap::new(),
                )
                .unwrap()
            })
            .collect();

        let report = grade_exam(&submission, &gold, &ExamConfig::default()).unwrap();

        let gt_by_name: BTreeMap<&str, usize> = gold
            .iter()
            .map(|i| (i.name.as_str(), i.objects().len()))
            .collect();
        let sub_by_name: BTreeMap<&str, usize> = submission
            .iter()
            .map(|i| (i.name.as_str(), i.objects().len()))
            .collect();

        let mut total_matched = 0usize;
        for image in &report.images {
            let n_gt = gt_by_name[image.image_ref.as_str()];
            let n_sub = sub_by_name[image.image_ref.as_str()];
            prop_assert_eq!(image.matched.len() + image.missed.len(), n_gt);
            prop_assert_eq!(image.matched.len() + image.spurious.len(), n_sub);

            // Matched indices are disjoint from the miss/spurious lists.
            let matched_gt: BTreeSet<usize> =
                image.matched.iter().map(|m| m.gt_index).collect();
            let matched_sub: BTreeSet<usize> =
                image.matched.iter().map(|m| m.sub_index).collect();
            prop_assert_eq!(matched_gt.len(), image.matched.len());
            prop_assert_eq!(matched_sub.len(), image.matched.len());
            for g in &image.missed {
                prop_assert!(!matched_gt.contains(g));
            }
            for s in &image.spurious {
                prop_assert!(!matched_sub.contains(s));
            }
            total_matched += image.matched.len();
        }

        prop_assert_eq!(report.aggregates.n_matched, total_matched);
        prop_assert_eq!(
            report.aggregates.n_ground_truth,
            gold.iter().map(|i| i.objects().len()).sum::<usize>()
        );
        prop_assert_eq!(
            report.aggregates.n_submitted,
            submission.iter().map(|i| i.objects().len()).sum::<usize>()
        );
    }

    #[test]
    fn clean_datasets_have_no_findings(
        scenes in proptest::collection::vec(arb_scene(), 1..6)
    ) {
        // Cycle through all five classes so the duplicate rule (same
        // class, high overlap) cannot fire on random placements.
        let images: Vec<AnnotatedImage> = scenes
            .iter()
            .enumerate()
            .map(|(i, (w, h, seeds))| {
                let objects: Vec<LabeledObject> = clean_objects(*w, *h, seeds)
                    .into_iter()
                    .enumerate()
                    .map(|(k, obj)| {
                        LabeledObject::new(
                            ConeClass::from_index((k % 5) as u32).unwrap(),
                            *obj.bbox(),
                            None,
                            obj.tags.clone(),
                        )
                        .unwrap()
                    })
                    .collect();
                AnnotatedImage::new(format!("img_{i:03}"), *w, *h, objects, BTreeMap::new())
                    .unwrap()
            })
            .collect();
        let findings = sanity_check(&images, &SanityConfig::default()).unwrap();
        prop_assert!(findings.is_empty(), "unexpected findings: {:?}", findings);
    }

    #[test]
    fn sanity_findings_come_out_sorted(
        scenes in proptest::collection::vec(arb_scene(), 1..6),
        fault_seeds in proptest::collection::vec((0u8..3, 0.0f64..1.0), 0..10),
    ) {
        // Start from clean images and inject faults: tiny boxes, boxes
        // hanging off the edge, and exact duplicates.
        let mut images = scenes_to_images(&scenes);
        for (k, &(kind, at)) in fault_seeds.iter().enumerate() {
            let slot = k % images.len();
            let image = &images[slot];
            let (w, h) = (image.width() as f64, image.height() as f64);
            let mut objects: Vec<LabeledObject> = image.objects().to_vec();
            match kind {
                0 => {
                    let x = at * (w - 2.0);
                    let bbox = BoundingBox::new(x, 1.0, x + 2.0, 3.0).unwrap();
                    objects.push(
                        LabeledObject::new(ConeClass::Blue, bbox, None, BTreeSet::new())
                            .unwrap(),
                    );
                }
                1 => {
                    let bbox =
                        BoundingBox::new(w - 10.0, h - 10.0, w + 20.0, h + 20.0).unwrap();
                    objects.push(
                        LabeledObject::new(ConeClass::Yellow, bbox, None, BTreeSet::new())
                            .unwrap(),
                    );
                }
                _ => {
                    if let Some(first) = objects.first().cloned() {
                        objects.push(first);
                    }
                }
            }
            images[slot] = AnnotatedImage::new(
                image.name.clone(),
                image.width(),
                image.height(),
                objects,
                BTreeMap::new(),
            )
            .unwrap();
        }

        let findings = sanity_check(&images, &SanityConfig::default()).unwrap();
        for pair in findings.windows(2) {
            let a = (
                pair[0].image_ref.as_str(),
                pair[0].object_index,
                pair[0].rule,
                pair[0].message.as_str(),
            );
            let b = (
                pair[1].image_ref.as_str(),
                pair[1].object_index,
                pair[1].rule,
                pair[1].message.as_str(),
            );
            prop_assert!(a <= b, "findings out of order: {:?} then {:?}", a, b);
        }
        for finding in &findings {
            if let Some(index) = finding.object_index {
                let image = images
                    .iter()
                    .find(|i| i.name == finding.image_ref)
                    .expect("finding references a known image");
                prop_assert!(index < image.objects().len());
            }
        }
    }
}

/// Swapping submission and ground truth swaps recall with precision and
/// missed with spurious. Uses continuous random boxes, where ties in IoU
/// (which could make the greedy matching pick differently) do not occur.
#[test]
fn swapping_sides_transposes_the_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(11_235_813);
    for _ in 0..50 {
        let n_images = rng.random_range(1..5);
        let mut gold = Vec::new();
        let mut other = Vec::new();
        for i in 0..n_images {
            let (w, h) = (800u32, 600u32);
            let mut a_objects = Vec::new();
            let mut b_objects = Vec::new();
            for _ in 0..rng.random_range(0..6usize) {
                let x = rng.random_range(0.0..700.0);
                let y = rng.random_range(0.0..500.0);
                let bw = rng.random_range(8.0..80.0);
                let bh = rng.random_range(8.0..80.0);
                let bbox = BoundingBox::new(x, y, x + bw, y + bh).unwrap();
                a_objects.push(
                    LabeledObject::new(ConeClass::Blue, bbox, None, BTreeSet::new()).unwrap(),
                );
                // Jittered copy, sometimes dropped, so the two sides differ.
                if rng.random_range(0.0..1.0) < 0.8 {
                    let dx = rng.random_range(-6.0..6.0);
                    let dy = rng.random_range(-6.0..6.0);
                    let jittered =
                        BoundingBox::new(x + dx, y + dy, x + bw + dx, y + bh + dy).unwrap();
                    b_objects.push(
                        LabeledObject::new(ConeClass::Blue, jittered, None, BTreeSet::new())
                            .unwrap(),
                    );
                }
            }
            let name = format!("img_{i:03}");
            gold.push(AnnotatedImage::new(&name, w, h, a_objects, BTreeMap::new()).unwrap());
            other.push(AnnotatedImage::new(&name, w, h, b_objects, BTreeMap::new()).unwrap());
        }

        let config = ExamConfig::default();
        let forward = grade_exam(&other, &gold, &config).unwrap();
        let backward = grade_exam(&gold, &other, &config).unwrap();

        assert_eq!(forward.aggregates.n_matched, backward.aggregates.n_matched);
        assert_eq!(forward.aggregates.recall, backward.aggregates.precision);
        assert_eq!(forward.aggregates.precision, backward.aggregates.recall);
        assert_eq!(forward.aggregates.mean_iou, backward.aggregates.mean_iou);
        for (f, b) in forward.images.iter().zip(&backward.images) {
            assert_eq!(f.image_ref, b.image_ref);
            assert_eq!(f.missed, b.spurious);
            assert_eq!(f.spurious, b.missed);
        }
    }
}
