//! Darknet YOLO box lists: one `cls cx cy w h` line per object, coordinates
//! normalized to `[0, 1]` by the image dimensions. The format carries no
//! image size itself, so callers must supply one. Fields are written with
//! six decimal places; tags cannot be represented and are dropped, masks
//! are rejected.

use std::fmt::Write as _;

use crate::core::{AnnotatedImage, ConeClass};
use crate::formats::{FormatError, FormatId, RawAnnotation, RawObject};

pub(crate) fn parse_raw(
    bytes: &[u8],
    image_dims: Option<(u32, u32)>,
) -> Result<RawAnnotation, FormatError> {
    let Some((width, height)) = image_dims else {
        return Err(FormatError::MissingImageDims {
            format: FormatId::DarknetYolo,
        });
    };
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Syntax {
        format: FormatId::DarknetYolo,
        line: 1,
        column: 1,
        message: format!("not valid UTF-8: {e}"),
    })?;

    let (w, h) = (width as f64, height as f64);
    let mut objects = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(FormatError::Syntax {
                format: FormatId::DarknetYolo,
                line,
                column: 1,
                message: format!("expected 5 fields `cls cx cy w h`, got {}", fields.len()),
            });
        }
        let cls_index: u32 = fields[0].parse().map_err(|_| FormatError::Syntax {
            format: FormatId::DarknetYolo,
            line,
            column: 1,
            message: format!("class index `{}` is not a non-negative integer", fields[0]),
        })?;
        let mut values = [0.0f64; 4];
        for (i, field) in fields[1..].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| FormatError::Syntax {
                format: FormatId::DarknetYolo,
                line,
                column: 1,
                message: format!("field `{field}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(FormatError::Syntax {
                    format: FormatId::DarknetYolo,
                    line,
                    column: 1,
                    message: format!("field `{field}` is not finite"),
                });
            }
            values[i] = value;
        }
        let [cx, cy, bw, bh] = values;
        let class_name = match ConeClass::from_index(cls_index) {
            Some(cls) => cls.name().to_owned(),
            // Keep the literal index; validation maps it to `other_cone`
            // with an unknown-class warning.
            None => fields[0].to_owned(),
        };
        objects.push(RawObject {
            class_name,
            corners: Some([
                (cx - bw / 2.0) * w,
                (cy - bh / 2.0) * h,
                (cx + bw / 2.0) * w,
                (cy + bh / 2.0) * h,
            ]),
            mask: None,
            tags: Vec::new(),
            norm: Some([cx, cy, bw, bh]),
        });
    }

    Ok(RawAnnotation {
        name: String::new(),
        size: None,
        objects,
        scene_meta: Default::default(),
    })
}

/// Writes one line per object. Boxes are clipped to the image rectangle
/// first (the format cannot express coordinates outside `[0, 1]`); masks
/// are a capability error.
pub(crate) fn write(image: &AnnotatedImage) -> Result<Vec<u8>, FormatError> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    let mut out = String::new();
    for (index, obj) in image.objects().iter().enumerate() {
        if obj.mask().is_some() {
            return Err(FormatError::UnsupportedFeature {
                format: FormatId::DarknetYolo,
                what: "polygon masks".into(),
            });
        }
        let b = obj
            .bbox()
            .clipped_to(w, h)
            .ok_or_else(|| FormatError::InvalidObject {
                index,
                message: "box has no overlap with the image".into(),
            })?;
        let cx = (b.x_min() + b.x_max()) / 2.0 / w;
        let cy = (b.y_min() + b.y_max()) / 2.0 / h;
        let bw = b.width() / w;
        let bh = b.height() / h;
        writeln!(
            out,
            "{} {:.6} {:.6} {:.6} {:.6}",
            obj.cls.index(),
            cx,
            cy,
            bw,
            bh
        )
        .expect("string writes cannot fail");
    }
    Ok(out.into_bytes())
}
