//! Annotation document formats: parsing, writing, conversion, and on-disk
//! dataset layout validation.
//!
//! Reading happens in two stages. Each format first produces a
//! [`RawAnnotation`] that mirrors what the document literally says, with
//! syntax errors reported against line/column positions. [`parse_annotation`]
//! then validates the raw data into a [`core::AnnotatedImage`]; geometry
//! faults are hard errors, while unknown class or tag names degrade to
//! warnings (unknown classes map to [`ConeClass::Other`]). The quality
//! module reuses the raw stage to turn geometry faults into findings
//! instead of errors.

pub mod labelbox;
pub mod layout;
pub mod supervisely;
pub mod voc;
pub mod yolo;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{AnnotatedImage, ConeClass, GeometryError, LabeledObject, ObjectTag, PolygonMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatId {
    SuperviselyLike,
    DarknetYolo,
    PascalVoc,
    Labelbox,
}

impl FormatId {
    pub const ALL: [FormatId; 4] = [
        FormatId::SuperviselyLike,
        FormatId::DarknetYolo,
        FormatId::PascalVoc,
        FormatId::Labelbox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormatId::SuperviselyLike => "supervisely_like",
            FormatId::DarknetYolo => "darknet_yolo",
            FormatId::PascalVoc => "pascal_voc",
            FormatId::Labelbox => "labelbox",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        FormatId::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for FormatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The conversion directions `convert` accepts; everything else is a
/// capability error, not a silent fallback.
pub const SUPPORTED_CONVERSIONS: [(FormatId, FormatId); 4] = [
    (FormatId::DarknetYolo, FormatId::SuperviselyLike),
    (FormatId::Labelbox, FormatId::SuperviselyLike),
    (FormatId::SuperviselyLike, FormatId::DarknetYolo),
    (FormatId::SuperviselyLike, FormatId::PascalVoc),
];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{format} syntax error at line {line}, column {column}: {message}")]
    Syntax {
        format: FormatId,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("object {index}: {message}")]
    InvalidObject { index: usize, message: String },
    #[error("{0}")]
    InvalidDocument(String),
    #[error("{format} documents do not carry image dimensions; they must be provided")]
    MissingImageDims { format: FormatId },
    #[error("document says {doc_width}x{doc_height} but provided image dimensions are {width}x{height}")]
    SizeMismatch {
        doc_width: u32,
        doc_height: u32,
        width: u32,
        height: u32,
    },
    #[error("conversion {from} -> {to} is not supported; supported directions: darknet_yolo -> supervisely_like, labelbox -> supervisely_like, supervisely_like -> darknet_yolo, supervisely_like -> pascal_voc")]
    UnsupportedConversion { from: FormatId, to: FormatId },
    #[error("{format} cannot represent {what}")]
    UnsupportedFeature { format: FormatId, what: String },
    #[error("writing {0} documents is not supported")]
    WriteUnsupported(FormatId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Polygon ring as `[x, y]` vertices.
pub(crate) type RawRing = Vec<[f64; 2]>;

/// What a document literally contains, before validation.
#[derive(Debug, Clone, Default)]
pub(crate) struct RawAnnotation {
    /// Image identifier carried by the document, verbatim; empty when the
    /// format has none.
    pub name: String,
    /// Image size embedded in the document, when the format carries one.
    pub size: Option<(u32, u32)>,
    pub objects: Vec<RawObject>,
    pub scene_meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawObject {
    /// Class name as written (for index-based formats, the index rendered
    /// back to a name when known, otherwise the literal index digits).
    pub class_name: String,
    /// Box corners in pixels; `None` for polygon objects, whose box is the
    /// mask hull.
    pub corners: Option<[f64; 4]>,
    pub mask: Option<(RawRing, Vec<RawRing>)>,
    pub tags: Vec<String>,
    /// Normalized `[cx, cy, w, h]` as read from box-list formats, kept so
    /// validation can check the documented `[0, 1]` range.
    pub norm: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    UnknownClass,
    UnknownTag,
}

/// Non-fatal parse degradation, e.g. a class outside the taxonomy that was
/// mapped to `other_cone`.
#[derive(Debug, Clone, Serialize)]
pub struct ParseWarning {
    pub object_index: usize,
    pub kind: WarningKind,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParsedAnnotation {
    pub image: AnnotatedImage,
    pub warnings: Vec<ParseWarning>,
}

pub(crate) fn parse_raw(
    format: FormatId,
    bytes: &[u8],
    image_dims: Option<(u32, u32)>,
) -> Result<RawAnnotation, FormatError> {
    match format {
        FormatId::SuperviselyLike => supervisely::parse_raw(bytes),
        FormatId::DarknetYolo => yolo::parse_raw(bytes, image_dims),
        FormatId::PascalVoc => voc::parse_raw(bytes),
        FormatId::Labelbox => labelbox::parse_raw(bytes),
    }
}

/// Parses an annotation document into a validated [`AnnotatedImage`].
///
/// `image_dims` is required for formats that do not embed the image size
/// (`darknet_yolo`, `labelbox`); when both the document and the caller
/// provide a size they must agree.
pub fn parse_annotation(
    format: FormatId,
    bytes: &[u8],
    image_dims: Option<(u32, u32)>,
) -> Result<ParsedAnnotation, FormatError> {
    let raw = parse_raw(format, bytes, image_dims)?;
    finalize(format, raw, image_dims)
}

pub(crate) fn finalize(
    format: FormatId,
    raw: RawAnnotation,
    image_dims: Option<(u32, u32)>,
) -> Result<ParsedAnnotation, FormatError> {
    let (width, height) = match (raw.size, image_dims) {
        (Some((dw, dh)), Some((w, h))) if (dw, dh) != (w, h) => {
            return Err(FormatError::SizeMismatch {
                doc_width: dw,
                doc_height: dh,
                width: w,
                height: h,
            })
        }
        (Some(size), _) => size,
        (None, Some(dims)) => dims,
        (None, None) => return Err(FormatError::MissingImageDims { format }),
    };

    let mut warnings = Vec::new();
    let mut objects = Vec::with_capacity(raw.objects.len());
    for (index, obj) in raw.objects.into_iter().enumerate() {
        let cls = match ConeClass::from_name(&obj.class_name) {
            Some(cls) => cls,
            None => {
                warnings.push(ParseWarning {
                    object_index: index,
                    kind: WarningKind::UnknownClass,
                    message: format!(
                        "unknown class `{}` mapped to other_cone",
                        obj.class_name
                    ),
                });
                ConeClass::Other
            }
        };

        let mut tags = std::collections::BTreeSet::new();
        for tag in &obj.tags {
            match ObjectTag::from_name(tag) {
                Some(t) => {
                    tags.insert(t);
                }
                None => warnings.push(ParseWarning {
                    object_index: index,
                    kind: WarningKind::UnknownTag,
                    message: format!("unknown tag `{tag}` ignored"),
                }),
            }
        }

        if let Some([cx, cy, w, h]) = obj.norm {
            for (field, value) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(FormatError::InvalidObject {
                        index,
                        message: format!(
                            "normalized field {field} = {value} is outside [0, 1]"
                        ),
                    });
                }
            }
        }

        let mask = match obj.mask {
            Some((exterior, holes)) => Some(
                PolygonMask::new(exterior, holes)
                    .map_err(|e| FormatError::InvalidObject {
                        index,
                        message: e.to_string(),
                    })?,
            ),
            None => None,
        };

        let labeled = match (obj.corners, mask) {
            (Some([x_min, y_min, x_max, y_max]), mask) => {
                let bbox = crate::core::BoundingBox::new(x_min, y_min, x_max, y_max)
                    .map_err(|e| FormatError::InvalidObject {
                        index,
                        message: e.to_string(),
                    })?;
                LabeledObject::new(cls, bbox, mask, tags)
            }
            (None, Some(mask)) => LabeledObject::from_mask(cls, mask, tags),
            (None, None) => {
                return Err(FormatError::InvalidObject {
                    index,
                    message: "object has neither box corners nor a polygon".into(),
                })
            }
        }
        .map_err(|e| FormatError::InvalidObject {
            index,
            message: e.to_string(),
        })?;
        objects.push(labeled);
    }

    let image = AnnotatedImage::new(raw.name, width, height, objects, raw.scene_meta)?;
    Ok(ParsedAnnotation { image, warnings })
}

/// Serializes an annotation in the given format. `labelbox` is read-only;
/// box-list formats reject masks rather than dropping them silently.
pub fn write_annotation(format: FormatId, image: &AnnotatedImage) -> Result<Vec<u8>, FormatError> {
    match format {
        FormatId::SuperviselyLike => Ok(supervisely::write(image)),
        FormatId::DarknetYolo => yolo::write(image),
        FormatId::PascalVoc => voc::write(image),
        FormatId::Labelbox => Err(FormatError::WriteUnsupported(FormatId::Labelbox)),
    }
}

/// Converts one document between formats: parse, then write. Only the
/// directions in [`SUPPORTED_CONVERSIONS`] are accepted.
pub fn convert(
    from: FormatId,
    to: FormatId,
    bytes: &[u8],
    image_dims: Option<(u32, u32)>,
) -> Result<Vec<u8>, FormatError> {
    if !SUPPORTED_CONVERSIONS.contains(&(from, to)) {
        return Err(FormatError::UnsupportedConversion { from, to });
    }
    let parsed = parse_annotation(from, bytes, image_dims)?;
    write_annotation(to, &parsed.image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_directions_are_gated() {
        for from in FormatId::ALL {
            for to in FormatId::ALL {
                let supported = SUPPORTED_CONVERSIONS.contains(&(from, to));
                if !supported {
                    let err = convert(from, to, b"{}", Some((100, 100))).unwrap_err();
                    assert!(
                        matches!(err, FormatError::UnsupportedConversion { .. }),
                        "{from} -> {to} should be rejected before parsing, got {err:?}"
                    );
                }
            }
        }
        assert_eq!(SUPPORTED_CONVERSIONS.len(), 4);
    }

    #[test]
    fn missing_dims_is_reported_for_dimensionless_formats() {
        let err = parse_annotation(FormatId::DarknetYolo, b"0 0.5 0.5 0.1 0.1\n", None).unwrap_err();
        assert!(matches!(err, FormatError::MissingImageDims { format: FormatId::DarknetYolo }));
    }

    #[test]
    fn size_mismatch_is_reported() {
        let doc = br#"{"size": {"width": 100, "height": 50}, "objects": []}"#;
        let err = parse_annotation(FormatId::SuperviselyLike, doc, Some((101, 50))).unwrap_err();
        assert!(matches!(err, FormatError::SizeMismatch { .. }));
        assert!(parse_annotation(FormatId::SuperviselyLike, doc, Some((100, 50))).is_ok());
    }
}
