//! Depth-image augmentations and missing-depth interpolation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::image::{DepthImage, MISSING};
use crate::error::{Error, Result};

/// Augmentation intensities. All zero leaves the image untouched.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentParams {
    /// Standard deviation of additive Gaussian depth noise, meters.
    pub noise_sigma: f64,
    /// Box blur radius in pixels.
    pub blur_radius: usize,
    /// Probability that a pixel loses its depth value.
    pub dropout: f64,
    /// Peak elastic displacement in pixels.
    pub elastic_amplitude: f64,
}

/// Control points per side of the coarse elastic displacement field.
const ELASTIC_GRID: usize = 4;

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.noise_sigma >= 0.0
            && self.elastic_amplitude >= 0.0
            && (0.0..=1.0).contains(&self.dropout);
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "augmentation parameters out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Applies elastic warping, blur, noise and dropout in that order.
pub fn augment<R: Rng + ?Sized>(
    image: &DepthImage,
    params: &AugmentParams,
    rng: &mut R,
) -> Result<DepthImage> {
    params.validate()?;
    let mut out = image.clone();
    if params.elastic_amplitude > 0.0 {
        out = elastic(&out, params.elastic_amplitude, rng);
    }
    if params.blur_radius > 0 {
        out = blur(&out, params.blur_radius);
    }
    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for d in out.data.iter_mut().filter(|d| **d != MISSING) {
            *d = (*d + normal.sample(rng)).clamp(image.near, image.far);
        }
    }
    if params.dropout > 0.0 {
        for d in out.data.iter_mut() {
            if rng.gen::<f64>() < params.dropout {
                *d = MISSING;
            }
        }
    }
    Ok(out)
}

/// Box blur over valid neighbors only; missing pixels stay missing.
fn blur(image: &DepthImage, radius: usize) -> DepthImage {
    let (w, h) = (image.width, image.height);
    let r = radius as isize;
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let k = y * w + x;
            if image.data[k] == MISSING {
                continue;
            }
            let (mut sum, mut n) = (0.0, 0usize);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    let d = image.data[yy as usize * w + xx as usize];
                    if d != MISSING {
                        sum += d;
                        n += 1;
                    }
                }
            }
            out.data[k] = sum / n as f64;
        }
    }
    out
}

/// Nearest-neighbor resampling along a smooth random displacement field
/// bilinearly upsampled from a coarse grid of control points.
fn elastic<R: Rng + ?Sized>(image: &DepthImage, amplitude: f64, rng: &mut R) -> DepthImage {
    let (w, h) = (image.width, image.height);
    let n = ELASTIC_GRID + 1;
    let field: Vec<(f64, f64)> = (0..n * n)
        .map(|_| {
            (
                rng.gen_range(-amplitude..=amplitude),
                rng.gen_range(-amplitude..=amplitude),
            )
        })
        .collect();
    let sample = |gx: f64, gy: f64| {
        let x0 = (gx.floor() as usize).min(ELASTIC_GRID - 1);
        let y0 = (gy.floor() as usize).min(ELASTIC_GRID - 1);
        let (tx, ty) = (gx - x0 as f64, gy - y0 as f64);
        let at = |i: usize, j: usize| field[j * n + i];
        let lerp = |a: (f64, f64), b: (f64, f64), t: f64| {
            (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
        };
        let top = lerp(at(x0, y0), at(x0 + 1, y0), tx);
        let bottom = lerp(at(x0, y0 + 1), at(x0 + 1, y0 + 1), tx);
        lerp(top, bottom, ty)
    };
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let gx = (x as f64 + 0.5) / w as f64 * ELASTIC_GRID as f64;
            let gy = (y as f64 + 0.5) / h as f64 * ELASTIC_GRID as f64;
            let (dx, dy) = sample(gx, gy);
            let sx = (x as f64 + dx).round().clamp(0.0, (w - 1) as f64) as usize;
            let sy = (y as f64 + dy).round().clamp(0.0, (h - 1) as f64) as usize;
            out.data[y * w + x] = image.data[sy * w + sx];
        }
    }
    out
}

/// Replaces every missing pixel by the nearest valid pixel (Euclidean pixel
/// distance; ties go to the earliest pixel in row-major order).
pub fn interpolate_missing(image: &DepthImage) -> Result<DepthImage> {
    if image.valid_count() == 0 {
        return Err(Error::NoValidDepth);
    }
    let (w, h) = (image.width as isize, image.height as isize);
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let k = (y * w + x) as usize;
            if !image.is_missing(k) {
                continue;
            }
            let mut best: Option<(isize, usize)> = None;
            let mut r = 1isize;
            // pixels on ring r are at least r away, so stop once r^2 exceeds the best
            while best.map_or(true, |(d2, _)| r * r <= d2) && r <= w.max(h) {
                for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                    let on_edge_row = (yy - y).abs() == r;
                    let step = if on_edge_row { 1 } else { 2 * r };
                    let mut xx = x - r;
                    while xx <= x + r {
                        if xx >= 0 && xx < w {
                            let j = (yy * w + xx) as usize;
                            if !image.is_missing(j) {
                                let d2 = (xx - x).pow(2) + (yy - y).pow(2);
                                let better = match best {
                                    None => true,
                                    Some((bd, bj)) => d2 < bd || (d2 == bd && j < bj),
                                };
                                if better {
                                    best = Some((d2, j));
                                }
                            }
                        }
                        xx += step;
                    }
                }
                r += 1;
            }
            let (_, j) = best.expect("at least one valid pixel exists");
            out.data[k] = image.data[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridcodec::CameraModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image(w: u32, h: u32, value: f64) -> DepthImage {
        let camera = CameraModel::centered(w, h, 50.0, 0.2, 1.8).unwrap();
        DepthImage::filled(&camera, value)
    }

    fn ramp(w: u32, h: u32) -> DepthImage {
        let mut img = image(w, h, 1.0);
        for (k, d) in img.data.iter_mut().enumerate() {
            *d = 0.5 + 0.001 * k as f64;
        }
        img
    }

    #[test]
    fn zero_params_are_identity() {
        let img = ramp(16, 16);
        let out = augment(&img, &AugmentParams::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn full_dropout_blanks_everything() {
        let params = AugmentParams {
            dropout: 1.0,
            ..Default::default()
        };
        let out = augment(&ramp(16, 16), &params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.valid_count(), 0);
    }

    #[test]
    fn noise_has_requested_spread() {
        let img = image(128, 128, 1.0);
        let params = AugmentParams {
            noise_sigma: 0.01,
            ..Default::default()
        };
        let out = augment(&img, &params, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let n = out.data.len() as f64;
        let mean = out.data.iter().sum::<f64>() / n;
        let var = out.data.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.01).abs() < 0.001, "std = {}", var.sqrt());
    }

    #[test]
    fn augmentations_are_seeded() {
        let params = AugmentParams {
            noise_sigma: 0.005,
            blur_radius: 1,
            dropout: 0.1,
            elastic_amplitude: 1.5,
        };
        let a = augment(&ramp(16, 16), &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = augment(&ramp(16, 16), &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.data.iter().all(|&d| d == 0.0 || (0.2..=1.8).contains(&d)));
    }

    #[test]
    fn blur_skips_missing_pixels() {
        let mut img = image(3, 1, 1.0);
        img.data = vec![1.0, MISSING, 2.0];
        let out = blur(&img, 1);
        assert_eq!(out.data, vec![1.0, MISSING, 2.0]);
        img.data = vec![1.0, 1.5, 2.0];
        assert_eq!(blur(&img, 1).data, vec![1.25, 1.5, 1.75]);
    }

    #[test]
    fn rejects_bad_params() {
        let params = AugmentParams {
            dropout: 1.5,
            ..Default::default()
        };
        assert!(augment(&ramp(4, 4), &params, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn interpolation_fills_holes() {
        let img = ramp(8, 8);
        assert_eq!(interpolate_missing(&img).unwrap(), img);

        let mut hole = image(5, 5, 0.7);
        hole.data[12] = MISSING;
        assert_eq!(interpolate_missing(&hole).unwrap().data[12], 0.7);

        assert!(matches!(
            interpolate_missing(&image(4, 4, MISSING)),
            Err(Error::NoValidDepth)
        ));
    }

    #[test]
    fn interpolation_ties_prefer_scan_order() {
        // the hole at index 1 is equidistant from index 0 and index 2
        let mut img = image(3, 1, 1.0);
        img.data = vec![0.4, MISSING, 0.9];
        assert_eq!(interpolate_missing(&img).unwrap().data[1], 0.4);
        // diagonal candidates: (0,0) beats (2,2) for the center pixel
        let mut img = image(3, 3, MISSING);
        img.data[0] = 0.3;
        img.data[8] = 0.6;
        assert_eq!(interpolate_missing(&img).unwrap().data[4], 0.3);
    }
}
