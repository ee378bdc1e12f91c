//! Supervisely-like JSON annotation documents.
//!
//! Schema:
//!
//! ```json
//! {
//!   "size": {"width": 1280, "height": 960},
//!   "objects": [
//!     {
//!       "classTitle": "blue_cone",
//!       "geometryType": "rectangle",
//!       "points": {"exterior": [[10.0, 20.0], [30.0, 60.0]], "interior": []},
//!       "tags": ["truncated"]
//!     }
//!   ],
//!   "meta": {"onboard": true}
//! }
//! ```
//!
//! Rectangles carry exactly two exterior points, `[x_min, y_min]` then
//! `[x_max, y_max]`. Polygons carry the exterior ring in `exterior` and
//! hole rings in `interior`; their box is the exterior hull. The optional
//! top-level `meta` object holds free-form scene metadata.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::core::AnnotatedImage;
use crate::formats::{FormatError, FormatId, RawAnnotation, RawObject};

#[derive(Serialize, Deserialize)]
struct Doc {
    size: Size,
    objects: Vec<Obj>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Size {
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
struct Obj {
    #[serde(rename = "classTitle")]
    class_title: String,
    #[serde(rename = "geometryType")]
    geometry_type: String,
    points: Points,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Points {
    exterior: Vec<[f64; 2]>,
    #[serde(default)]
    interior: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn parse_raw(bytes: &[u8]) -> Result<RawAnnotation, FormatError> {
    let doc: Doc = serde_json::from_slice(bytes).map_err(|e| FormatError::Syntax {
        format: FormatId::SuperviselyLike,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut objects = Vec::with_capacity(doc.objects.len());
    for (index, obj) in doc.objects.into_iter().enumerate() {
        let raw = match obj.geometry_type.as_str() {
            "rectangle" => {
                if obj.points.exterior.len() != 2 {
                    return Err(FormatError::InvalidObject {
                        index,
                        message: format!(
                            "rectangle must have exactly 2 exterior points, got {}",
                            obj.points.exterior.len()
                        ),
                    });
                }
                if !obj.points.interior.is_empty() {
                    return Err(FormatError::InvalidObject {
                        index,
                        message: "rectangle must not have interior rings".into(),
                    });
                }
                let [p0, p1] = [obj.points.exterior[0], obj.points.exterior[1]];
                RawObject {
                    class_name: obj.class_title,
                    corners: Some([p0[0], p0[1], p1[0], p1[1]]),
                    mask: None,
                    tags: obj.tags,
                    norm: None,
                }
            }
            "polygon" => RawObject {
                class_name: obj.class_title,
                corners: None,
                mask: Some((obj.points.exterior, obj.points.interior)),
                tags: obj.tags,
                norm: None,
            },
            other => {
                return Err(FormatError::InvalidObject {
                    index,
                    message: format!("unsupported geometryType `{other}`"),
                })
            }
        };
        objects.push(raw);
    }

    Ok(RawAnnotation {
        name: String::new(),
        size: Some((doc.size.width, doc.size.height)),
        objects,
        scene_meta: doc.meta,
    })
}

/// Writes a document that parses back to the same `AnnotatedImage`
/// (less the name, which this format does not carry).
pub(crate) fn write(image: &AnnotatedImage) -> Vec<u8> {
    let objects = image
        .objects()
        .iter()
        .map(|obj| {
            let tags: Vec<String> = obj.tags.iter().map(|t| t.name().to_owned()).collect();
            let (geometry_type, points) = match obj.mask() {
                Some(mask) => (
                    "polygon",
                    Points {
                        exterior: mask.exterior().to_vec(),
                        interior: mask.holes().to_vec(),
                    },
                ),
                None => {
                    let b = obj.bbox();
                    (
                        "rectangle",
                        Points {
                            exterior: vec![[b.x_min(), b.y_min()], [b.x_max(), b.y_max()]],
                            interior: vec![],
                        },
                    )
                }
            };
            Obj {
                class_title: obj.cls.name().to_owned(),
                geometry_type: geometry_type.to_owned(),
                points,
                tags,
            }
        })
        .collect();

    let doc = Doc {
        size: Size {
            width: image.width(),
            height: image.height(),
        },
        objects,
        meta: image.scene_meta.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("document serialization cannot fail");
    bytes.push(b'\n');
    bytes
}
