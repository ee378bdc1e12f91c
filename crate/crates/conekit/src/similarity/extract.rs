//! Deterministic image features for similarity scoring.
//!
//! Pipeline (all arithmetic in f64, fixed order, no randomness):
//!
//! 1. bilinear-resize the RGB image to `resized_side` squared (channels
//!    scaled to `[0, 1]`),
//! 2. split into a `grid x grid` tile layout,
//! 3. per tile emit mean R, mean G, mean B, the population standard
//!    deviation of intensity `(r + g + b) / 3`, and a
//!    gradient-orientation histogram (`orientation_bins` bins over
//!    `[0, 2pi)`, each pixel weighted by gradient magnitude; gradients are
//!    central differences of intensity with clamped borders),
//! 4. concatenate tiles row-major and L2-normalize the whole vector.
//!
//! Defaults give `16 * 16 * (4 + 12) = 4096` dimensions. Images with zero
//! feature energy (e.g. uniformly black) have no direction in feature
//! space and are rejected.

use serde::{Deserialize, Serialize};

use crate::imaging::RasterImage;
use crate::similarity::{FeatureVector, SimilarityError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Side length images are resized to before tiling.
    pub resized_side: u32,
    /// Number of tiles along each axis; must divide `resized_side`.
    pub grid: u32,
    /// Gradient-orientation histogram bins per tile.
    pub orientation_bins: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            resized_side: 128,
            grid: 16,
            orientation_bins: 12,
        }
    }
}

impl ExtractConfig {
    pub fn feature_dim(&self) -> usize {
        (self.grid as usize) * (self.grid as usize) * (4 + self.orientation_bins)
    }

    fn validate(&self) -> Result<(), SimilarityError> {
        if self.resized_side == 0 || self.grid == 0 || self.orientation_bins == 0 {
            return Err(SimilarityError::Config(
                "resized_side, grid and orientation_bins must be positive".into(),
            ));
        }
        if !self.resized_side.is_multiple_of(self.grid) {
            return Err(SimilarityError::Config(format!(
                "grid {} must divide resized_side {}",
                self.grid, self.resized_side
            )));
        }
        Ok(())
    }
}

/// Extracts the feature vector of one image. `image_ref` becomes the
/// vector's name in feature files and reports.
pub fn extract_features(
    image: &RasterImage,
    image_ref: &str,
    config: &ExtractConfig,
) -> Result<FeatureVector, SimilarityError> {
    config.validate()?;
    let side = config.resized_side as usize;
    let (r, g, b) = resize_bilinear(image, config.resized_side);

    let mut intensity = vec![0.0f64; side * side];
    for i in 0..side * side {
        intensity[i] = (r[i] + g[i] + b[i]) / 3.0;
    }

    // Central differences with clamped border indices.
    let mut gx = vec![0.0f64; side * side];
    let mut gy = vec![0.0f64; side * side];
    for y in 0..side {
        for x in 0..side {
            let xl = x.saturating_sub(1);
            let xr = (x + 1).min(side - 1);
            let yu = y.saturating_sub(1);
            let yd = (y + 1).min(side - 1);
            gx[y * side + x] = (intensity[y * side + xr] - intensity[y * side + xl]) / 2.0;
            gy[y * side + x] = (intensity[yd * side + x] - intensity[yu * side + x]) / 2.0;
        }
    }

    let grid = config.grid as usize;
    let tile = side / grid;
    let bins = config.orientation_bins;
    let tile_px = (tile * tile) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut values = Vec::with_capacity(config.feature_dim());
    for ty in 0..grid {
        for tx in 0..grid {
            let mut sum_r = 0.0;
            let mut sum_g = 0.0;
            let mut sum_b = 0.0;
            let mut sum_i = 0.0;
            let mut hist = vec![0.0f64; bins];
            for dy in 0..tile {
                let y = ty * tile + dy;
                for dx in 0..tile {
                    let x = tx * tile + dx;
                    let i = y * side + x;
                    sum_r += r[i];
                    sum_g += g[i];
                    sum_b += b[i];
                    sum_i += intensity[i];
                    let magnitude = (gx[i] * gx[i] + gy[i] * gy[i]).sqrt();
                    if magnitude > 0.0 {
                        let mut angle = gy[i].atan2(gx[i]);
                        if angle < 0.0 {
                            angle += two_pi;
                        }
                        let bin = ((angle / two_pi) * bins as f64) as usize;
                        hist[bin.min(bins - 1)] += magnitude;
                    }
                }
            }
            let mean_i = sum_i / tile_px;
            // Second pass over deviations: no cancellation between the
            // mean square and the square mean.
            let mut dev2 = 0.0;
            for dy in 0..tile {
                let y = ty * tile + dy;
                for dx in 0..tile {
                    let d = intensity[y * side + tx * tile + dx] - mean_i;
                    dev2 += d * d;
                }
            }
            let variance = dev2 / tile_px;
            values.push(sum_r / tile_px);
            values.push(sum_g / tile_px);
            values.push(sum_b / tile_px);
            values.push(variance.sqrt());
            values.extend_from_slice(&hist);
        }
    }

    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(SimilarityError::ZeroVector(image_ref.to_owned()));
    }
    let normalized: Vec<f32> = values.into_iter().map(|v| (v / norm) as f32).collect();
    FeatureVector::new(image_ref, normalized)
}

/// Bilinear resize to `side x side`, returning the three channel planes in
/// `[0, 1]`. Sample positions use the half-pixel convention
/// `src = (dst + 0.5) * scale - 0.5`, clamped to the source.
fn resize_bilinear(image: &RasterImage, side: u32) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let side_us = side as usize;
    let (src_w, src_h) = (image.width() as usize, image.height() as usize);
    let scale_x = src_w as f64 / side as f64;
    let scale_y = src_h as f64 / side as f64;

    let mut r = vec![0.0f64; side_us * side_us];
    let mut g = vec![0.0f64; side_us * side_us];
    let mut b = vec![0.0f64; side_us * side_us];

    for y in 0..side_us {
        let sy = ((y as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (src_h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let fy = sy - y0 as f64;
        for x in 0..side_us {
            let sx = ((x as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (src_w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let fx = sx - x0 as f64;

            let p00 = image.pixel(x0 as u32, y0 as u32);
            let p10 = image.pixel(x1 as u32, y0 as u32);
            let p01 = image.pixel(x0 as u32, y1 as u32);
            let p11 = image.pixel(x1 as u32, y1 as u32);

            let i = y * side_us + x;
            for (plane, c) in [(&mut r, 0), (&mut g, 1), (&mut b, 2)] {
                let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
                let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                plane[i] = (top * (1.0 - fy) + bottom * fy) / 255.0;
            }
        }
    }
    (r, g, b)
}
