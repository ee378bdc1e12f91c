//! Readers for detector output.
//!
//! Two encodings are supported: a line-based text format with normalized
//! centre boxes (the shape detectors trained on `darknet_yolo` labels
//! emit), and a JSON array with pixel corner boxes. Detector boxes are
//! taken as-is; they are never clamped to the image.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::core::{BoundingBox, ConeClass};
use crate::eval::{Detection, EvalError};

/// Parses whitespace-separated detection lines
/// `<image> <class-index> <confidence> <cx> <cy> <w> <h>`
/// with centre/size normalized by the image dimensions, which are looked
/// up in `dims` (width, height). Blank lines and `#` comments are skipped.
pub fn parse_darknet_detections(
    text: &str,
    dims: &BTreeMap<String, (u32, u32)>,
) -> Result<Vec<Detection>, EvalError> {
    let mut detections = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(EvalError::Parse {
                line,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let image_ref = fields[0].to_string();
        let class_index: u32 = fields[1].parse().map_err(|_| EvalError::Parse {
            line,
            message: format!("bad class index `{}`", fields[1]),
        })?;
        let cls = ConeClass::from_index(class_index).ok_or_else(|| EvalError::Parse {
            line,
            message: format!("class index {class_index} is out of range"),
        })?;
        let mut nums = [0.0f64; 5];
        for (slot, field) in nums.iter_mut().zip(&fields[2..]) {
            *slot = field.parse().map_err(|_| EvalError::Parse {
                line,
                message: format!("bad number `{field}`"),
            })?;
            if !slot.is_finite() {
                return Err(EvalError::Parse {
                    line,
                    message: format!("non-finite number `{field}`"),
                });
            }
        }
        let [confidence, cx, cy, w, h] = nums;
        let (width, height) = *dims
            .get(&image_ref)
            .ok_or_else(|| EvalError::MissingDims(image_ref.clone()))?;
        let (width, height) = (width as f64, height as f64);
        let bbox = BoundingBox::new(
            (cx - w / 2.0) * width,
            (cy - h / 2.0) * height,
            (cx + w / 2.0) * width,
            (cy + h / 2.0) * height,
        )
        .map_err(|e| EvalError::Parse {
            line,
            message: e.to_string(),
        })?;
        detections.push(
            Detection::new(image_ref, cls, confidence, bbox).map_err(|e| EvalError::Parse {
                line,
                message: e.to_string(),
            })?,
        );
    }
    Ok(detections)
}

#[derive(Deserialize)]
struct JsonDetection {
    image: String,
    class: String,
    confidence: f64,
    /// Pixel corners `[x_min, y_min, x_max, y_max]`.
    bbox: [f64; 4],
}

/// Parses a JSON array of detections with pixel corner boxes:
/// `[{"image", "class", "confidence", "bbox": [x_min, y_min, x_max, y_max]}]`.
pub fn parse_json_detections(text: &str) -> Result<Vec<Detection>, EvalError> {
    let raw: Vec<JsonDetection> = serde_json::from_str(text).map_err(|e| EvalError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(index, d)| {
            let cls = ConeClass::from_name(&d.class).ok_or_else(|| EvalError::InvalidDetection {
                index,
                message: format!("unknown class `{}`", d.class),
            })?;
            let bbox = BoundingBox::new(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3]).map_err(
                |e| EvalError::InvalidDetection {
                    index,
                    message: e.to_string(),
                },
            )?;
            Detection::new(d.image, cls, d.confidence, bbox).map_err(|e| {
                EvalError::InvalidDetection {
                    index,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> BTreeMap<String, (u32, u32)> {
        let mut m = BTreeMap::new();
        m.insert("t_00001.png".to_string(), (1000, 800));
        m
    }

    #[test]
    fn darknet_lines_become_pixel_boxes() {
        let text = "\
# detector output
t_00001.png 0 0.9 0.5 0.5 0.2 0.25

t_00001.png 3 0.375 0.1 0.1 0.05 0.05
";
        let dets = parse_darknet_detections(text, &dims()).unwrap();
        assert_eq!(dets.len(), 2);
        let d = &dets[0];
        assert_eq!(d.image_ref(), "t_00001.png");
        assert_eq!(d.cls(), ConeClass::Blue);
        assert_eq!(d.confidence(), 0.9);
        assert_eq!(d.bbox().x_min(), 400.0);
        assert_eq!(d.bbox().x_max(), 600.0);
        assert_eq!(d.bbox().y_min(), 300.0);
        assert_eq!(d.bbox().y_max(), 500.0);
        assert_eq!(dets[1].cls(), ConeClass::LargeOrange);
    }

    #[test]
    fn detector_boxes_may_spill_outside_the_image() {
        // Centre near the border: the box runs to x = -50 and stays there.
        let text = "t_00001.png 0 0.5 0.0 0.5 0.1 0.1";
        let dets = parse_darknet_detections(text, &dims()).unwrap();
        assert_eq!(dets[0].bbox().x_min(), -50.0);
        assert_eq!(dets[0].bbox().x_max(), 50.0);
    }

    #[test]
    fn missing_dims_and_bad_lines_error() {
        assert!(matches!(
            parse_darknet_detections("x.png 0 0.5 0.5 0.5 0.1 0.1", &dims()),
            Err(EvalError::MissingDims(name)) if name == "x.png"
        ));
        assert!(matches!(
            parse_darknet_detections("t_00001.png 0 0.5 0.5 0.5 0.1", &dims()),
            Err(EvalError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_darknet_detections("t_00001.png 9 0.5 0.5 0.5 0.1 0.1", &dims()),
            Err(EvalError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_darknet_detections("t_00001.png 0 1.5 0.5 0.5 0.1 0.1", &dims()),
            Err(EvalError::Parse { line: 1, .. })
        ));
        let two_line = "t_00001.png 0 0.5 0.5 0.5 0.1 0.1\nt_00001.png 0 oops 0.5 0.5 0.1 0.1";
        assert!(matches!(
            parse_darknet_detections(two_line, &dims()),
            Err(EvalError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn json_detections_parse_pixel_corners() {
        let text = r#"[
            {"image": "t_00001.png", "class": "yellow_cone", "confidence": 0.75,
             "bbox": [10.0, 20.0, 30.0, 60.0]}
        ]"#;
        let dets = parse_json_detections(text).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].cls(), ConeClass::Yellow);
        assert_eq!(dets[0].bbox().y_max(), 60.0);
    }

    #[test]
    fn json_errors_carry_positions() {
        assert!(matches!(
            parse_json_detections("not json"),
            Err(EvalError::Parse { .. })
        ));
        let bad_class = r#"[{"image": "a", "class": "red_cone", "confidence": 0.5,
                             "bbox": [0, 0, 1, 1]}]"#;
        assert!(matches!(
            parse_json_detections(bad_class),
            Err(EvalError::InvalidDetection { index: 0, .. })
        ));
        let bad_box = r#"[{"image": "a", "class": "blue_cone", "confidence": 0.5,
                           "bbox": [5, 0, 1, 1]}]"#;
        assert!(matches!(
            parse_json_detections(bad_box),
            Err(EvalError::InvalidDetection { index: 0, .. })
        ));
    }
}
