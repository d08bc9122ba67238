//! Raster primitives: cropping, grayscale conversion, bilateral filtering,
//! Otsu and to-zero thresholding, and Canny edge detection.
//!
//! Every operation takes its input by reference and returns a new image.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("crop rect ({x0}..{x1}, {y0}..{y1}) exceeds {width}x{height} image")]
    OutOfBounds {
        x0: usize,
        x1: usize,
        y0: usize,
        y1: usize,
        width: usize,
        height: usize,
    },
    #[error("expected {expected}-channel image, got {actual}")]
    WrongChannelCount { expected: usize, actual: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate histogram: every pixel equals {value}")]
    DegenerateHistogram { value: u8 },
}

/// 8-bit raster, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(ImagingError::InvalidImage(format!(
                "pixel buffer holds {} bytes, expected {}",
                pixels.len(),
                width * height * channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_fn_gray(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImagingError> {
        let mut px = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                px.push(f(x, y));
            }
        }
        Self::new(width, height, 1, px)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.pixels[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.pixels[i..i + self.channels]
    }

    /// First channel at (x, y).
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels]
    }

    /// Promote a 1-channel image to 3 channels by replication; 3-channel
    /// images are returned unchanged.
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let pixels = self.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            pixels,
        }
    }

    fn is_achromatic(&self) -> bool {
        self.channels == 1 || self.pixels.chunks_exact(3).all(|p| p[0] == p[1] && p[1] == p[2])
    }

    fn require_channels(&self, expected: usize) -> Result<(), ImagingError> {
        if self.channels == expected {
            Ok(())
        } else {
            Err(ImagingError::WrongChannelCount {
                expected,
                actual: self.channels,
            })
        }
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl CropRect {
    pub const fn new(x0: usize, x1: usize, y0: usize, y1: usize) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn full(img: &RasterImage) -> Self {
        Self::new(0, img.width, 0, img.height)
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && self.x1 <= width && self.y1 <= height
    }
}

pub fn crop(img: &RasterImage, r: CropRect) -> Result<RasterImage, ImagingError> {
    if !r.fits(img.width, img.height) {
        return Err(ImagingError::OutOfBounds {
            x0: r.x0,
            x1: r.x1,
            y0: r.y0,
            y1: r.y1,
            width: img.width,
            height: img.height,
        });
    }
    let c = img.channels;
    let mut pixels = Vec::with_capacity(r.width() * r.height() * c);
    for y in r.y0..r.y1 {
        let start = (y * img.width + r.x0) * c;
        pixels.extend_from_slice(&img.pixels[start..start + r.width() * c]);
    }
    RasterImage::new(r.width(), r.height(), c, pixels)
}

/// BT.601 luma, rounded to nearest.
pub fn to_grayscale(img: &RasterImage) -> Result<RasterImage, ImagingError> {
    img.require_channels(3)?;
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let l = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            l.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    RasterImage::new(img.width, img.height, 1, pixels)
}

/// Window offsets for a diameter-`d` neighborhood. Even diameters lean
/// toward the negative side: d = 30 spans -15..=14.
pub fn window_offsets(d: usize) -> (isize, isize) {
    let lo = -((d / 2) as isize);
    (lo, lo + d as isize - 1)
}

/// Bilateral filter over a square diameter-`d` window. Neighbors outside
/// the image are dropped (window clipping). Three-channel images are
/// filtered jointly with the squared RGB distance as the range term.
pub fn bilateral_filter(
    img: &RasterImage,
    d: usize,
    sigma_color: f64,
    sigma_space: f64,
) -> Result<RasterImage, ImagingError> {
    if d < 1 {
        return Err(ImagingError::InvalidParams("bilateral diameter must be >= 1".into()));
    }
    if !(sigma_color > 0.0 && sigma_space > 0.0 && sigma_color.is_finite() && sigma_space.is_finite()) {
        return Err(ImagingError::InvalidParams(format!(
            "bilateral sigmas must be positive, got color={sigma_color} space={sigma_space}"
        )));
    }
    let (lo, hi) = window_offsets(d);
    let side = d;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in lo..=hi {
        for dx in lo..=hi {
            let r2 = (dx * dx + dy * dy) as f64;
            spatial.push((-r2 / (2.0 * sigma_space * sigma_space)).exp());
        }
    }
    let max_d2 = img.channels * 255 * 255;
    let color: Vec<f64> = (0..=max_d2)
        .map(|d2| (-(d2 as f64) / (2.0 * sigma_color * sigma_color)).exp())
        .collect();

    let kernel = Kernel {
        lo,
        hi,
        side,
        spatial: &spatial,
        color: &color,
    };

    if img.channels == 1 || img.is_achromatic() {
        // An achromatic RGB image filters identically to its single plane
        // with the range distance scaled by the channel count.
        let plane: Vec<u8> = img.pixels.iter().step_by(img.channels).copied().collect();
        let out = kernel.filter_plane(&plane, img.width, img.height, img.channels);
        let pixels = if img.channels == 1 {
            out
        } else {
            out.iter().flat_map(|&v| [v, v, v]).collect()
        };
        return RasterImage::new(img.width, img.height, img.channels, pixels);
    }
    let out = kernel.filter_rgb(&img.pixels, img.width, img.height);
    RasterImage::new(img.width, img.height, 3, out)
}

struct Kernel<'a> {
    lo: isize,
    hi: isize,
    side: usize,
    spatial: &'a [f64],
    color: &'a [f64],
}

impl Kernel<'_> {
    fn clip(&self, c: usize, n: usize) -> (isize, isize) {
        let c = c as isize;
        let a = self.lo.max(-c);
        let b = self.hi.min(n as isize - 1 - c);
        (a, b)
    }

    fn filter_plane(&self, plane: &[u8], w: usize, h: usize, range_scale: usize) -> Vec<u8> {
        // Same weights as `color`, keyed by the signed difference + 255.
        let range: Vec<f64> = (-255i32..=255)
            .map(|d| self.color[(d * d) as usize * range_scale])
            .collect();
        let mut out = vec![0u8; w * h];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let (ya, yb) = self.clip(y, h);
            for (x, o) in row.iter_mut().enumerate() {
                let (xa, xb) = self.clip(x, w);
                let center = plane[y * w + x] as usize;
                let rg = &range[255 - center..];
                let mut sum = 0.0f64;
                let mut wsum = 0.0f64;
                for dy in ya..=yb {
                    let qy = (y as isize + dy) as usize;
                    let srow = ((dy - self.lo) as usize) * self.side;
                    let sp = &self.spatial[srow + (xa - self.lo) as usize..=srow + (xb - self.lo) as usize];
                    let q = &plane[qy * w + (x as isize + xa) as usize..=qy * w + (x as isize + xb) as usize];
                    for (&v, &s) in q.iter().zip(sp) {
                        let wgt = s * rg[v as usize];
                        sum += v as f64 * wgt;
                        wsum += wgt;
                    }
                }
                *o = (sum / wsum).round().clamp(0.0, 255.0) as u8;
            }
        });
        out
    }

    fn filter_rgb(&self, px: &[u8], w: usize, h: usize) -> Vec<u8> {
        let mut out = vec![0u8; w * h * 3];
        out.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
            let (ya, yb) = self.clip(y, h);
            for x in 0..w {
                let (xa, xb) = self.clip(x, w);
                let ci = (y * w + x) * 3;
                let c = [px[ci] as i32, px[ci + 1] as i32, px[ci + 2] as i32];
                let mut sum = [0.0f64; 3];
                let mut wsum = 0.0f64;
                for dy in ya..=yb {
                    let qy = (y as isize + dy) as usize;
                    let srow = ((dy - self.lo) as usize) * self.side;
                    for dx in xa..=xb {
                        let qx = (x as isize + dx) as usize;
                        let qi = (qy * w + qx) * 3;
                        let q = [px[qi] as i32, px[qi + 1] as i32, px[qi + 2] as i32];
                        let d2 = ((q[0] - c[0]).pow(2) + (q[1] - c[1]).pow(2) + (q[2] - c[2]).pow(2)) as usize;
                        let wgt = self.spatial[srow + (dx - self.lo) as usize] * self.color[d2];
                        for k in 0..3 {
                            sum[k] += q[k] as f64 * wgt;
                        }
                        wsum += wgt;
                    }
                }
                for k in 0..3 {
                    row[x * 3 + k] = (sum[k] / wsum).round().clamp(0.0, 255.0) as u8;
                }
            }
        });
        out
    }
}

pub fn histogram(img: &RasterImage) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in img.pixels.iter().step_by(img.channels) {
        h[v as usize] += 1;
    }
    h
}

/// Otsu's threshold: the `t` maximizing between-class variance when class 0
/// holds intensities `<= t`. Ties resolve to the smallest `t`.
pub fn otsu_threshold(img: &RasterImage) -> Result<u8, ImagingError> {
    img.require_channels(1)?;
    let hist = histogram(img);
    let total: i128 = hist.iter().map(|&c| c as i128).sum();
    let total_sum: i128 = hist.iter().enumerate().map(|(v, &c)| v as i128 * c as i128).sum();
    if let Some(v) = hist.iter().position(|&c| c as i128 == total) {
        return Err(ImagingError::DegenerateHistogram { value: v as u8 });
    }

    let mut best_t = 0u8;
    let mut best = f64::NEG_INFINITY;
    let (mut n0, mut s0) = (0i128, 0i128);
    for (t, &h) in hist.iter().enumerate() {
        n0 += h as i128;
        s0 += t as i128 * h as i128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // sigma_b^2 * total^2 = (total*s0 - n0*S)^2 / (n0*n1)
        let diff = (total * s0 - n0 * total_sum) as f64;
        let score = diff * diff / (n0 as f64 * n1 as f64);
        if score > best {
            best = score;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Pixels above `t` keep their value, the rest become 0.
pub fn threshold_to_zero(img: &RasterImage, t: u8) -> RasterImage {
    let pixels = img.pixels.iter().map(|&v| if v > t { v } else { 0 }).collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: img.channels,
        pixels,
    }
}

const GAUSS_SIGMA: f64 = 1.4;

fn gaussian_kernel_5() -> [f64; 5] {
    let mut k = [0.0; 5];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - 2.0;
        *v = (-x * x / (2.0 * GAUSS_SIGMA * GAUSS_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn gaussian_smooth(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let k = gaussian_kernel_5();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..5)
                .map(|i| k[i] * src[y * w + clamp_idx(x as isize + i as isize - 2, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..5)
                .map(|i| k[i] * tmp[clamp_idx(y as isize + i as isize - 2, h) * w + x])
                .sum();
        }
    }
    out
}

/// Gradient magnitude and quantized direction (0: horizontal gradient,
/// 1: down-right diagonal, 2: vertical, 3: down-left diagonal).
fn sobel(src: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<u8>) {
    let at = |x: isize, y: isize| src[clamp_idx(y, h) * w + clamp_idx(x, w)];
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            dir[i] = if !(22.5..157.5).contains(&angle) {
                0
            } else if angle < 67.5 {
                1
            } else if angle < 112.5 {
                2
            } else {
                3
            };
        }
    }
    (mag, dir)
}

/// Canny edge detector: 5x5 Gaussian (sigma 1.4), Sobel gradients,
/// non-maximum suppression along the quantized gradient direction,
/// double threshold and 8-connected hysteresis. Output is 0/255.
pub fn canny(img: &RasterImage, low: f64, high: f64) -> Result<RasterImage, ImagingError> {
    img.require_channels(1)?;
    if !(low >= 0.0 && low <= high && high.is_finite()) {
        return Err(ImagingError::InvalidParams(format!(
            "canny thresholds need 0 <= low <= high, got low={low} high={high}"
        )));
    }
    let (w, h) = (img.width, img.height);
    let src: Vec<f64> = img.pixels.iter().map(|&v| v as f64).collect();
    let smooth = gaussian_smooth(&src, w, h);
    let (mag, dir) = sobel(&smooth, w, h);

    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    // Strict against the "behind" neighbor and non-strict against the one
    // ahead so a symmetric ridge keeps exactly one pixel.
    let mut thin = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v <= 0.0 {
                continue;
            }
            let (a, b) = match dir[i] {
                0 => (m(x - 1, y), m(x + 1, y)),
                1 => (m(x - 1, y - 1), m(x + 1, y + 1)),
                2 => (m(x, y - 1), m(x, y + 1)),
                _ => (m(x + 1, y - 1), m(x - 1, y + 1)),
            };
            if v > a && v >= b {
                thin[i] = v;
            }
        }
    }

    let mut out = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= high && v > 0.0 {
            out[i] = 255;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0 && thin[j] >= low && thin[j] > 0.0 {
                    out[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    RasterImage::new(w, h, 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(w: usize, h: usize, f: impl FnMut(usize, usize) -> u8) -> RasterImage {
        RasterImage::from_fn_gray(w, h, f).unwrap()
    }

    #[test]
    fn raster_invariants() {
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 3]).is_err());
        assert!(RasterImage::new(0, 2, 1, vec![]).is_err());
        let img = RasterImage::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.pixel(1, 0), &[4, 5, 6]);
    }

    #[test]
    fn crop_default_roi() {
        let img = RasterImage::filled(1378, 672, 3, 7).unwrap();
        let out = crop(&img, CropRect::new(500, 900, 224, 448)).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (400, 224, 3));
    }

    #[test]
    fn crop_identity_and_offsets() {
        let img = gray(13, 9, |x, y| (x * 10 + y) as u8);
        assert_eq!(crop(&img, CropRect::full(&img)).unwrap(), img);
        let sub = crop(&img, CropRect::new(3, 8, 2, 6)).unwrap();
        for j in 0..4 {
            for i in 0..5 {
                assert_eq!(sub.get(i, j), img.get(3 + i, 2 + j));
            }
        }
    }

    #[test]
    fn crop_out_of_bounds() {
        let img = RasterImage::filled(1378, 672, 1, 0).unwrap();
        assert!(matches!(
            crop(&img, CropRect::new(0, 2000, 0, 10)),
            Err(ImagingError::OutOfBounds { .. })
        ));
        assert!(crop(&img, CropRect::new(5, 5, 0, 10)).is_err());
    }

    #[test]
    fn grayscale_examples() {
        let white = RasterImage::filled(4, 3, 3, 255).unwrap();
        assert!(to_grayscale(&white).unwrap().pixels().iter().all(|&v| v == 255));
        let black = RasterImage::filled(4, 3, 3, 0).unwrap();
        assert!(to_grayscale(&black).unwrap().pixels().iter().all(|&v| v == 0));
        let px = RasterImage::new(1, 1, 3, vec![100, 150, 200]).unwrap();
        assert_eq!(to_grayscale(&px).unwrap().get(0, 0), 141);
        let g = RasterImage::filled(2, 2, 1, 3).unwrap();
        assert_eq!(
            to_grayscale(&g),
            Err(ImagingError::WrongChannelCount { expected: 3, actual: 1 })
        );
    }

    #[test]
    fn window_offsets_even_and_odd() {
        assert_eq!(window_offsets(30), (-15, 14));
        assert_eq!(window_offsets(5), (-2, 2));
        assert_eq!(window_offsets(1), (0, 0));
    }

    #[test]
    fn bilateral_rejects_bad_params() {
        let img = RasterImage::filled(3, 3, 1, 9).unwrap();
        assert!(bilateral_filter(&img, 0, 1.0, 1.0).is_err());
        assert!(bilateral_filter(&img, 3, 0.0, 1.0).is_err());
        assert!(bilateral_filter(&img, 3, 1.0, -1.0).is_err());
    }

    #[test]
    fn bilateral_constant_and_identity() {
        let c = RasterImage::filled(20, 11, 3, 77).unwrap();
        assert_eq!(bilateral_filter(&c, 30, 100.0, 100.0).unwrap(), c);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy = gray(17, 9, |_, _| rng.random());
        assert_eq!(bilateral_filter(&noisy, 1, 100.0, 100.0).unwrap(), noisy);
    }

    #[test]
    fn bilateral_output_within_window_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = gray(24, 18, |_, _| rng.random());
        let out = bilateral_filter(&img, 5, 40.0, 3.0).unwrap();
        let (lo, hi) = window_offsets(5);
        for y in 0..18isize {
            for x in 0..24isize {
                let mut mn = 255u8;
                let mut mx = 0u8;
                for dy in lo..=hi {
                    for dx in lo..=hi {
                        let (qx, qy) = (x + dx, y + dy);
                        if qx >= 0 && qy >= 0 && qx < 24 && qy < 18 {
                            let v = img.get(qx as usize, qy as usize);
                            mn = mn.min(v);
                            mx = mx.max(v);
                        }
                    }
                }
                let v = out.get(x as usize, y as usize);
                assert!(mn <= v && v <= mx);
            }
        }
    }

    #[test]
    fn otsu_half_black_half_white() {
        let img = gray(10, 10, |x, _| if x < 5 { 0 } else { 255 });
        assert_eq!(otsu_threshold(&img).unwrap(), 0);
    }

    #[test]
    fn otsu_degenerate() {
        let img = RasterImage::filled(8, 8, 1, 128).unwrap();
        assert_eq!(
            otsu_threshold(&img),
            Err(ImagingError::DegenerateHistogram { value: 128 })
        );
    }

    #[test]
    fn otsu_bimodal_lands_between_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = rand_distr::Normal::new(0.0, 12.0).unwrap();
        let img = gray(64, 64, |x, _| {
            let base = if x < 32 { 60.0 } else { 200.0 };
            let v: f64 = base + rng.sample(normal);
            v.round().clamp(0.0, 255.0) as u8
        });
        let t = otsu_threshold(&img).unwrap();
        assert!(t > 60 && t < 200, "t = {t}");
    }

    #[test]
    fn to_zero_examples() {
        let img = RasterImage::new(3, 1, 1, vec![10, 100, 200]).unwrap();
        assert_eq!(threshold_to_zero(&img, 100).pixels(), &[0, 0, 200]);
        assert_eq!(threshold_to_zero(&img, 255).pixels(), &[0, 0, 0]);
        let z = RasterImage::new(3, 1, 1, vec![0, 1, 255]).unwrap();
        assert_eq!(threshold_to_zero(&z, 0), z);
    }

    #[test]
    fn canny_rejects_bad_thresholds() {
        let img = RasterImage::filled(5, 5, 1, 0).unwrap();
        assert!(canny(&img, 10.0, 5.0).is_err());
        assert!(canny(&img, -1.0, 5.0).is_err());
    }

    #[test]
    fn canny_constant_image_has_no_edges() {
        let img = RasterImage::filled(30, 20, 1, 140).unwrap();
        assert!(canny(&img, 50.0, 150.0).unwrap().pixels().iter().all(|&v| v == 0));
    }

    #[test]
    fn canny_vertical_step() {
        // step between columns 24 and 25
        let img = gray(50, 40, |x, _| if x < 25 { 20 } else { 200 });
        let e = canny(&img, 50.0, 150.0).unwrap();
        for y in 0..40 {
            let cols: Vec<usize> = (0..50).filter(|&x| e.get(x, y) == 255).collect();
            assert_eq!(cols.len(), 1, "row {y}: {cols:?}");
            assert!((24..=25).contains(&cols[0]));
        }
    }

    #[test]
    fn canny_binary_and_thin_on_bands() {
        let img = gray(120, 60, |x, _| {
            if (30..50).contains(&x) || (80..95).contains(&x) {
                180
            } else {
                30
            }
        });
        let e = canny(&img, 50.0, 150.0).unwrap();
        assert!(e.pixels().iter().all(|&v| v == 0 || v == 255));
        for y in 0..59 {
            for x in 0..119 {
                let block = [e.get(x, y), e.get(x + 1, y), e.get(x, y + 1), e.get(x + 1, y + 1)];
                assert!(block.contains(&0));
            }
        }
        for y in [0, 17, 59] {
            let cols: Vec<usize> = (0..120).filter(|&x| e.get(x, y) == 255).collect();
            assert_eq!(cols.len(), 4, "row {y}: {cols:?}");
            for (c, truth) in cols.iter().zip([30.0, 50.0, 80.0, 95.0]) {
                assert!((*c as f64 - (truth - 0.5)).abs() <= 1.0);
            }
        }
    }
}
