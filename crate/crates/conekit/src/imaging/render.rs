//! Annotation overlays: box outlines and translucent mask fills drawn
//! onto a copy of the image, colour-coded by cone class.

use serde::Serialize;

use crate::core::{AnnotatedImage, ConeClass, PolygonMask};
use crate::imaging::{ImagingError, RasterImage};

#[derive(Debug, Clone, Serialize)]
pub struct RenderStyle {
    /// Outline thickness in pixels, drawn inward and outward from the box
    /// edge.
    pub thickness: u32,
    /// Opacity of mask fills, in [0, 1].
    pub mask_alpha: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            thickness: 2,
            mask_alpha: 0.4,
        }
    }
}

/// Overlay colour per class.
pub fn class_color(cls: ConeClass) -> [u8; 3] {
    match cls {
        ConeClass::Blue => [0, 0, 255],
        ConeClass::Yellow => [255, 255, 0],
        ConeClass::SmallOrange => [255, 140, 0],
        ConeClass::LargeOrange => [200, 80, 0],
        ConeClass::Other => [128, 128, 128],
    }
}

fn blend(base: [u8; 3], over: [u8; 3], alpha: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = base[c] as f64 * (1.0 - alpha) + over[c] as f64 * alpha;
        out[c] = v.round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Draws `ann`'s objects onto a copy of `img`: mask fills first, then box
/// outlines on top. The annotation's dimensions must match the image.
pub fn render_overlay(
    img: &RasterImage,
    ann: &AnnotatedImage,
    style: &RenderStyle,
) -> Result<RasterImage, ImagingError> {
    if ann.width() != img.width() || ann.height() != img.height() {
        return Err(ImagingError::DimMismatch {
            ann_width: ann.width(),
            ann_height: ann.height(),
            width: img.width(),
            height: img.height(),
        });
    }
    let mut out = img.clone();
    for object in ann.objects() {
        if let Some(mask) = object.mask() {
            fill_mask(&mut out, mask, class_color(object.cls), style.mask_alpha);
        }
    }
    for object in ann.objects() {
        let b = object.bbox();
        draw_box_outline(
            &mut out,
            b.x_min(),
            b.y_min(),
            b.x_max(),
            b.y_max(),
            class_color(object.cls),
            style.thickness,
        );
    }
    Ok(out)
}

/// Paints every pixel within `thickness` of the rounded box edge. The box
/// is rounded to an inclusive pixel rectangle first, so thin boxes still
/// produce a visible frame.
fn draw_box_outline(
    img: &mut RasterImage,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    color: [u8; 3],
    thickness: u32,
) {
    let t = thickness.max(1) as i64;
    let left = x_min.round() as i64;
    let top = y_min.round() as i64;
    // Inclusive far edges: a box ending at x = 30 owns pixel column 29.
    let right = (x_max.round() as i64 - 1).max(left);
    let bottom = (y_max.round() as i64 - 1).max(top);

    let x_lo = (left - t + 1).max(0);
    let x_hi = (right + t - 1).min(img.width() as i64 - 1);
    let y_lo = (top - t + 1).max(0);
    let y_hi = (bottom + t - 1).min(img.height() as i64 - 1);
    // The loop bounds already restrict to the frame band; within it, a
    // pixel is painted when it sits strictly within `t` of some edge.
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let near_vertical = (x - left).abs() < t || (x - right).abs() < t;
            let near_horizontal = (y - top).abs() < t || (y - bottom).abs() < t;
            if near_vertical || near_horizontal {
                img.set_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Even-odd scanline fill over all rings, so holes stay unfilled.
fn fill_mask(img: &mut RasterImage, mask: &PolygonMask, color: [u8; 3], alpha: f64) {
    let rings: Vec<&[[f64; 2]]> = std::iter::once(mask.exterior())
        .chain(mask.holes().iter().map(|h| h.as_slice()))
        .collect();

    let ys: Vec<f64> = rings.iter().flat_map(|r| r.iter().map(|p| p[1])).collect();
    let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let y_hi = ys
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil()
        .min(img.height() as f64 - 1.0) as u32;

    for y in y_lo..=y_hi {
        let scan_y = y as f64 + 0.5;
        let mut crossings = Vec::new();
        for ring in &rings {
            let n = ring.len();
            for i in 0..n {
                let a = ring[i];
                let b = ring[(i + 1) % n];
                let (lo, hi) = if a[1] <= b[1] { (a, b) } else { (b, a) };
                // Half-open span [lo.y, hi.y): each vertex counts once.
                if scan_y >= lo[1] && scan_y < hi[1] {
                    let x = lo[0] + (scan_y - lo[1]) / (hi[1] - lo[1]) * (hi[0] - lo[0]);
                    crossings.push(x);
                }
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).expect("vertices are finite"));
        for pair in crossings.chunks_exact(2) {
            let x_start = pair[0].ceil().max(0.0) as i64;
            let x_end = (pair[1].floor() as i64 - 1).min(img.width() as i64 - 1);
            let mut x = x_start;
            while x <= x_end {
                let base = img.pixel(x as u32, y);
                img.set_pixel(x as u32, y, blend(base, color, alpha));
                x += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{BoundingBox, LabeledObject};

    fn annotated(objects: Vec<LabeledObject>) -> AnnotatedImage {
        AnnotatedImage::new("t_00001.png", 100, 80, objects, Default::default()).unwrap()
    }

    fn boxed(cls: ConeClass, c: [f64; 4]) -> LabeledObject {
        LabeledObject::new(
            cls,
            BoundingBox::new(c[0], c[1], c[2], c[3]).unwrap(),
            None,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn outline_paints_edges_not_interior() {
        let img = RasterImage::filled(100, 80, [10, 10, 10]).unwrap();
        let ann = annotated(vec![boxed(ConeClass::Blue, [20.0, 20.0, 40.0, 40.0])]);
        let out = render_overlay(&img, &ann, &RenderStyle::default()).unwrap();
        assert_eq!(out.pixel(20, 20), [0, 0, 255], "corner is painted");
        assert_eq!(out.pixel(30, 20), [0, 0, 255], "top edge is painted");
        assert_eq!(out.pixel(30, 30), [10, 10, 10], "interior is untouched");
        assert_eq!(out.pixel(5, 5), [10, 10, 10], "far outside is untouched");
        // Default thickness 2 reaches one pixel beyond the edge row.
        assert_eq!(out.pixel(30, 19), [0, 0, 255]);
        assert_eq!(out.pixel(30, 18), [10, 10, 10]);
    }

    #[test]
    fn outline_clamps_at_image_border() {
        // Box spilling past the top-left corner: only the in-image part of
        // the frame is painted, without panicking.
        let img = RasterImage::filled(100, 80, [0, 0, 0]).unwrap();
        let ann = annotated(vec![boxed(ConeClass::Yellow, [-5.0, -5.0, 30.0, 30.0])]);
        let out = render_overlay(&img, &ann, &RenderStyle::default()).unwrap();
        assert_eq!(out.pixel(29, 10), [255, 255, 0], "right edge is visible");
        assert_eq!(out.pixel(0, 0), [0, 0, 0], "off-image edges paint nothing");
    }

    #[test]
    fn colors_follow_classes() {
        assert_eq!(class_color(ConeClass::Blue), [0, 0, 255]);
        assert_eq!(class_color(ConeClass::Yellow), [255, 255, 0]);
        assert_eq!(class_color(ConeClass::SmallOrange), [255, 140, 0]);
        assert_eq!(class_color(ConeClass::LargeOrange), [200, 80, 0]);
        assert_eq!(class_color(ConeClass::Other), [128, 128, 128]);
    }

    #[test]
    fn mask_fill_blends_interior_and_respects_holes() {
        let img = RasterImage::filled(100, 80, [0, 0, 0]).unwrap();
        let mask = PolygonMask::new(
            vec![[10.0, 10.0], [50.0, 10.0], [50.0, 50.0], [10.0, 50.0]],
            vec![vec![[20.0, 20.0], [30.0, 20.0], [30.0, 30.0], [20.0, 30.0]]],
        )
        .unwrap();
        let object = LabeledObject::from_mask(ConeClass::Blue, mask, Default::default()).unwrap();
        let ann = annotated(vec![object]);
        let out = render_overlay(&img, &ann, &RenderStyle { thickness: 1, mask_alpha: 0.4 }).unwrap();
        // 40% blue over black.
        assert_eq!(out.pixel(40, 40), [0, 0, 102]);
        assert_eq!(out.pixel(25, 25), [0, 0, 0], "hole interior stays unfilled");
    }

    #[test]
    fn dim_mismatch_is_an_error() {
        let img = RasterImage::filled(50, 50, [0, 0, 0]).unwrap();
        let ann = annotated(vec![]);
        assert!(matches!(
            render_overlay(&img, &ann, &RenderStyle::default()),
            Err(ImagingError::DimMismatch { .. })
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let img = RasterImage::filled(100, 80, [30, 40, 50]).unwrap();
        let ann = annotated(vec![
            boxed(ConeClass::Blue, [5.0, 5.0, 25.0, 25.0]),
            boxed(ConeClass::LargeOrange, [15.0, 15.0, 60.0, 60.0]),
        ]);
        let a = render_overlay(&img, &ann, &RenderStyle::default()).unwrap();
        let b = render_overlay(&img, &ann, &RenderStyle::default()).unwrap();
        assert_eq!(a.data(), b.data());
    }
}
