//! Raster images, file IO, and watermark-border cropping with annotation
//! adjustment.

pub mod render;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::core::{AnnotatedImage, GeometryError, LabeledObject, PolygonMask};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("pixel buffer holds {len} bytes, but {width}x{height} RGB needs {expected}")]
    BadBufferLength {
        width: u32,
        height: u32,
        len: usize,
        expected: usize,
    },
    #[error("cannot crop a {border} px border from a {width}x{height} image; both dimensions must be strictly larger than twice the border")]
    CropTooSmall {
        width: u32,
        height: u32,
        border: u32,
    },
    #[error("annotation is for {ann_width}x{ann_height}, image is {width}x{height}")]
    DimMismatch {
        ann_width: u32,
        ann_height: u32,
        width: u32,
        height: u32,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// 8-bit RGB image, row-major, no padding.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyImage { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(ImagingError::BadBufferLength {
                width,
                height,
                len: data.len(),
                expected,
            });
        }
        Ok(RasterImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        let mut data = vec![0u8; width as usize * height as usize * 3];
        for px in data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        RasterImage::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

pub fn load_image(path: &Path) -> Result<RasterImage, ImagingError> {
    let decoded = image::open(path).map_err(|source| ImagingError::Image {
        path: path.to_owned(),
        source,
    })?;
    let rgb = decoded.to_rgb8();
    let (width, height) = rgb.dimensions();
    RasterImage::new(width, height, rgb.into_raw())
}

/// Reads just the header; cheap compared to a full decode.
pub fn read_dimensions(path: &Path) -> Result<(u32, u32), ImagingError> {
    image::image_dimensions(path).map_err(|source| ImagingError::Image {
        path: path.to_owned(),
        source,
    })
}

pub fn save_png(img: &RasterImage, path: &Path) -> Result<(), ImagingError> {
    let buffer: image::RgbImage =
        image::ImageBuffer::from_raw(img.width, img.height, img.data.clone())
            .expect("buffer length is validated at construction");
    buffer
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| ImagingError::Image {
            path: path.to_owned(),
            source,
        })
}

pub fn save_jpeg(img: &RasterImage, path: &Path, quality: u8) -> Result<(), ImagingError> {
    let file = std::fs::File::create(path).map_err(|source| ImagingError::Io {
        path: path.to_owned(),
        source,
    })?;
    let writer = std::io::BufWriter::new(file);
    let mut encoder = image::codecs::jpeg::JpegEncoder::new_with_quality(writer, quality);
    encoder
        .encode(
            &img.data,
            img.width,
            img.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|source| ImagingError::Image {
            path: path.to_owned(),
            source,
        })
}

fn check_croppable(width: u32, height: u32, border: u32) -> Result<(), ImagingError> {
    if width <= 2 * border || height <= 2 * border {
        return Err(ImagingError::CropTooSmall {
            width,
            height,
            border,
        });
    }
    Ok(())
}

/// Removes a `border`-pixel frame on every side. The image must be
/// strictly larger than twice the border in both dimensions.
pub fn crop_watermark(img: &RasterImage, border: u32) -> Result<RasterImage, ImagingError> {
    check_croppable(img.width, img.height, border)?;
    let new_w = img.width - 2 * border;
    let new_h = img.height - 2 * border;
    let mut data = Vec::with_capacity(new_w as usize * new_h as usize * 3);
    for y in 0..new_h {
        let src_y = (y + border) as usize;
        let start = (src_y * img.width as usize + border as usize) * 3;
        let end = start + new_w as usize * 3;
        data.extend_from_slice(&img.data[start..end]);
    }
    RasterImage::new(new_w, new_h, data)
}

/// Result of adjusting an annotation to a border crop.
#[derive(Debug, Clone)]
pub struct CropOutcome {
    pub annotation: AnnotatedImage,
    /// Indices (into the *new* object list) of objects whose geometry was
    /// cut down by the crop window.
    pub clipped: Vec<usize>,
    /// Indices (into the *original* object list) of objects that fell
    /// entirely outside the crop window and were removed.
    pub dropped: Vec<usize>,
}

/// Translates an annotation into the coordinate frame of
/// [`crop_watermark`] output: shift by `-border`, clip boxes and masks to
/// the new canvas, drop objects left without positive area.
pub fn crop_annotation(ann: &AnnotatedImage, border: u32) -> Result<CropOutcome, ImagingError> {
    check_croppable(ann.width(), ann.height(), border)?;
    let new_w = ann.width() - 2 * border;
    let new_h = ann.height() - 2 * border;
    let (wf, hf) = (new_w as f64, new_h as f64);
    let shift = -(border as f64);

    let mut objects = Vec::new();
    let mut clipped = Vec::new();
    let mut dropped = Vec::new();
    for (index, obj) in ann.objects().iter().enumerate() {
        let moved = obj.bbox().translated(shift, shift);
        let Some(boxed) = moved.clipped_to(wf, hf) else {
            dropped.push(index);
            continue;
        };
        let box_changed = boxed != moved;

        let mut mask_changed = false;
        let mask = obj.mask().and_then(|mask| {
            let move_ring = |ring: &[[f64; 2]]| -> Vec<[f64; 2]> {
                ring.iter().map(|p| [p[0] + shift, p[1] + shift]).collect()
            };
            // The window is convex, so a ring with every vertex inside is
            // untouched by clipping.
            let fully_inside = |ring: &[[f64; 2]]| {
                ring.iter()
                    .all(|p| p[0] >= 0.0 && p[0] <= wf && p[1] >= 0.0 && p[1] <= hf)
            };
            let exterior = move_ring(mask.exterior());
            let clipped_ext = if fully_inside(&exterior) {
                exterior
            } else {
                mask_changed = true;
                clip_ring(&exterior, wf, hf)
            };
            let mut holes = Vec::new();
            for hole in mask.holes() {
                let moved_hole = move_ring(hole);
                let clipped_hole = if fully_inside(&moved_hole) {
                    moved_hole
                } else {
                    mask_changed = true;
                    clip_ring(&moved_hole, wf, hf)
                };
                if clipped_hole.len() >= 3 {
                    holes.push(clipped_hole);
                }
            }
            match PolygonMask::new(clipped_ext, holes) {
                Ok(mask) => Some(mask),
                Err(_) => {
                    // The mask degenerated to a sliver; keep the box.
                    mask_changed = true;
                    None
                }
            }
        });

        let new_obj = LabeledObject::new(obj.cls, boxed, mask, obj.tags.clone())?;
        if box_changed || mask_changed {
            clipped.push(objects.len());
        }
        objects.push(new_obj);
    }

    let annotation = AnnotatedImage::new(
        ann.name.clone(),
        new_w,
        new_h,
        objects,
        ann.scene_meta.clone(),
    )?;
    Ok(CropOutcome {
        annotation,
        clipped,
        dropped,
    })
}

/// Sutherland-Hodgman clip of a ring against `[0, w] x [0, h]`. May return
/// fewer than 3 vertices when the ring degenerates.
fn clip_ring(ring: &[[f64; 2]], w: f64, h: f64) -> Vec<[f64; 2]> {
    // Each edge is (inside predicate, segment intersection).
    type Edge = (fn(&[f64; 2], f64) -> bool, fn(&[f64; 2], &[f64; 2], f64) -> [f64; 2]);
    let edges: [(Edge, f64); 4] = [
        ((|p, _| p[0] >= 0.0, |a, b, _| intersect_x(a, b, 0.0)), 0.0),
        ((|p, w| p[0] <= w, |a, b, w| intersect_x(a, b, w)), w),
        ((|p, _| p[1] >= 0.0, |a, b, _| intersect_y(a, b, 0.0)), 0.0),
        ((|p, h| p[1] <= h, |a, b, h| intersect_y(a, b, h)), h),
    ];

    let mut current = ring.to_vec();
    for ((inside, cross), bound) in edges {
        if current.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(current.len() + 4);
        for i in 0..current.len() {
            let a = current[i];
            let b = current[(i + 1) % current.len()];
            let a_in = inside(&a, bound);
            let b_in = inside(&b, bound);
            match (a_in, b_in) {
                (true, true) => next.push(b),
                (true, false) => next.push(cross(&a, &b, bound)),
                (false, true) => {
                    next.push(cross(&a, &b, bound));
                    next.push(b);
                }
                (false, false) => {}
            }
        }
        current = next;
    }
    dedup_ring(current)
}

fn intersect_x(a: &[f64; 2], b: &[f64; 2], x: f64) -> [f64; 2] {
    let t = (x - a[0]) / (b[0] - a[0]);
    [x, a[1] + t * (b[1] - a[1])]
}

fn intersect_y(a: &[f64; 2], b: &[f64; 2], y: f64) -> [f64; 2] {
    let t = (y - a[1]) / (b[1] - a[1]);
    [a[0] + t * (b[0] - a[0]), y]
}

fn dedup_ring(ring: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{BoundingBox, ConeClass};

    fn pattern(width: u32, height: u32) -> RasterImage {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                for c in 0..3u32 {
                    data.push(((x * 31 + y * 17 + c * 97) % 256) as u8);
                }
            }
        }
        RasterImage::new(width, height, data).unwrap()
    }

    #[test]
    fn crop_keeps_the_exact_interior() {
        let img = pattern(300, 200);
        let cropped = crop_watermark(&img, 40).unwrap();
        assert_eq!((cropped.width(), cropped.height()), (220, 120));
        for y in 0..cropped.height() {
            for x in 0..cropped.width() {
                assert_eq!(cropped.pixel(x, y), img.pixel(x + 40, y + 40));
            }
        }
    }

    #[test]
    fn crop_rejects_images_not_strictly_larger_than_twice_the_border() {
        let img = pattern(280, 280);
        assert!(matches!(
            crop_watermark(&img, 140),
            Err(ImagingError::CropTooSmall { .. })
        ));
        let ann = AnnotatedImage::new("x", 280, 280, vec![], Default::default()).unwrap();
        assert!(matches!(
            crop_annotation(&ann, 140),
            Err(ImagingError::CropTooSmall { .. })
        ));
        // 281x281 is the smallest croppable square at border 140.
        let img = pattern(281, 281);
        let cropped = crop_watermark(&img, 140).unwrap();
        assert_eq!((cropped.width(), cropped.height()), (1, 1));
    }

    fn obj(cls: ConeClass, x0: f64, y0: f64, x1: f64, y1: f64) -> LabeledObject {
        LabeledObject::new(
            cls,
            BoundingBox::new(x0, y0, x1, y1).unwrap(),
            None,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn crop_translates_clips_and_drops_objects() {
        let ann = AnnotatedImage::new(
            "x",
            1000,
            800,
            vec![
                obj(ConeClass::Blue, 150.0, 150.0, 200.0, 220.0), // fully inside
                obj(ConeClass::Yellow, 100.0, 100.0, 200.0, 200.0), // straddles the border
                obj(ConeClass::Other, 0.0, 0.0, 120.0, 120.0),    // fully in the border
            ],
            Default::default(),
        )
        .unwrap();
        let out = crop_annotation(&ann, 140).unwrap();
        assert_eq!(
            (out.annotation.width(), out.annotation.height()),
            (720, 520)
        );
        assert_eq!(out.annotation.objects().len(), 2);
        assert_eq!(out.dropped, vec![2]);
        assert_eq!(out.clipped, vec![1]);

        let kept = out.annotation.objects()[0].bbox();
        assert_eq!(
            (kept.x_min(), kept.y_min(), kept.x_max(), kept.y_max()),
            (10.0, 10.0, 60.0, 80.0)
        );
        let cut = out.annotation.objects()[1].bbox();
        assert_eq!(
            (cut.x_min(), cut.y_min(), cut.x_max(), cut.y_max()),
            (0.0, 0.0, 60.0, 60.0)
        );
    }

    #[test]
    fn crop_clips_masks_with_the_same_window() {
        let mask = PolygonMask::new(
            vec![[100.0, 160.0], [220.0, 160.0], [220.0, 200.0], [100.0, 200.0]],
            vec![],
        )
        .unwrap();
        let object = LabeledObject::from_mask(ConeClass::Blue, mask, Default::default()).unwrap();
        let ann =
            AnnotatedImage::new("x", 1000, 800, vec![object], Default::default()).unwrap();
        let out = crop_annotation(&ann, 140).unwrap();
        let new_obj = &out.annotation.objects()[0];
        let hull = new_obj.mask().unwrap().hull().unwrap();
        assert_eq!(
            (hull.x_min(), hull.y_min(), hull.x_max(), hull.y_max()),
            (0.0, 20.0, 80.0, 60.0)
        );
        assert_eq!(out.clipped, vec![0]);
    }

    #[test]
    fn double_crop_composes() {
        let img = pattern(500, 400);
        let once = crop_watermark(&crop_watermark(&img, 50).unwrap(), 60).unwrap();
        let direct = crop_watermark(&img, 110).unwrap();
        assert_eq!(once, direct);
    }

    #[test]
    fn png_round_trip_is_lossless() {
        let img = pattern(33, 21);
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("x.png");
        save_png(&img, &path).unwrap();
        let loaded = load_image(&path).unwrap();
        assert_eq!(img, loaded);
        assert_eq!(read_dimensions(&path).unwrap(), (33, 21));
    }

    #[test]
    fn jpeg_saves_and_reloads() {
        let img = pattern(40, 30);
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("x.jpg");
        save_jpeg(&img, &path, 90).unwrap();
        let loaded = load_image(&path).unwrap();
        assert_eq!((loaded.width(), loaded.height()), (40, 30));
    }

    fn cyclically_equal(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
        a.len() == b.len()
            && (0..a.len()).any(|shift| (0..a.len()).all(|i| a[i] == b[(i + shift) % b.len()]))
    }

    #[test]
    fn clip_ring_cases() {
        // Fully inside: same ring up to rotation.
        let ring = vec![[1.0, 1.0], [5.0, 1.0], [3.0, 4.0]];
        assert!(cyclically_equal(&clip_ring(&ring, 10.0, 10.0), &ring));
        // Fully outside: empty.
        assert!(clip_ring(&[[20.0, 20.0], [30.0, 20.0], [25.0, 30.0]], 10.0, 10.0).is_empty());
        // Straddling: clipped rectangle.
        let cut = clip_ring(&[[-5.0, 2.0], [5.0, 2.0], [5.0, 8.0], [-5.0, 8.0]], 10.0, 10.0);
        assert!(cyclically_equal(
            &cut,
            &[[0.0, 2.0], [5.0, 2.0], [5.0, 8.0], [0.0, 8.0]]
        ));
    }
}
