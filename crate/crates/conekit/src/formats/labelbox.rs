//! Labelbox export documents (read-only).
//!
//! Schema (the subset this tool consumes):
//!
//! ```json
//! {
//!   "External ID": "ampera_00042.jpg",
//!   "Label": {
//!     "objects": [
//!       {"value": "blue_cone", "bbox": {"top": 20.0, "left": 10.0, "height": 40.0, "width": 20.0}}
//!     ]
//!   }
//! }
//! ```
//!
//! `bbox` is in pixels, top-left anchored. The document carries no image
//! size, so callers must provide dimensions. Objects may name their class
//! in `value` or `title`; anything outside the taxonomy maps to
//! `other_cone` with a warning.

use serde::Deserialize;

use crate::formats::{FormatError, FormatId, RawAnnotation, RawObject};

#[derive(Deserialize)]
struct Root {
    #[serde(rename = "External ID", default)]
    external_id: Option<String>,
    #[serde(rename = "Label", default)]
    label: Option<Label>,
}

#[derive(Deserialize, Default)]
struct Label {
    #[serde(default)]
    objects: Vec<Obj>,
}

#[derive(Deserialize)]
struct Obj {
    #[serde(default)]
    value: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    bbox: Option<Bbox>,
}

#[derive(Deserialize)]
struct Bbox {
    top: f64,
    left: f64,
    height: f64,
    width: f64,
}

pub(crate) fn parse_raw(bytes: &[u8]) -> Result<RawAnnotation, FormatError> {
    let root: Root = serde_json::from_slice(bytes).map_err(|e| FormatError::Syntax {
        format: FormatId::Labelbox,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut objects = Vec::new();
    for (index, obj) in root.label.unwrap_or_default().objects.into_iter().enumerate() {
        let bbox = obj.bbox.ok_or_else(|| FormatError::InvalidObject {
            index,
            message: "object has no bbox geometry".into(),
        })?;
        let class_name = obj.value.or(obj.title).unwrap_or_default();
        objects.push(RawObject {
            class_name,
            corners: Some([
                bbox.left,
                bbox.top,
                bbox.left + bbox.width,
                bbox.top + bbox.height,
            ]),
            mask: None,
            tags: Vec::new(),
            norm: None,
        });
    }

    Ok(RawAnnotation {
        name: root.external_id.unwrap_or_default(),
        size: None,
        objects,
        scene_meta: Default::default(),
    })
}
