//! Image files, annotated overlays and SVG report plots.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};
use thiserror::Error;

use crate::geometry::{Line2, Point2};
use crate::imaging::{ImagingError, RasterImage};
use crate::landmarks::LandmarkSet;
use crate::measurement::{Measurement, PosteriorSide};
use crate::stats::{BlandAltman, Histogram};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot encode image: {0}")]
    Encode(String),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Decodes PNG or JPEG bytes to a three-channel image.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage, IoError> {
    let img = image::load_from_memory(bytes).map_err(|e| IoError::Decode(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    Ok(RasterImage::new(w, h, 3, rgb.into_raw())?)
}

pub fn read_image(path: &Path) -> Result<RasterImage, IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    decode_image(&bytes)
}

/// PNG bytes for a one- or three-channel image.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, IoError> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let px = img.pixels().to_vec();
    let dynamic = match img.channels() {
        1 => DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, px).ok_or_else(|| IoError::Encode("size".into()))?),
        3 => DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, px).ok_or_else(|| IoError::Encode("size".into()))?),
        c => return Err(IoError::Encode(format!("{c}-channel images are not supported"))),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| IoError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

type Rgb = [u8; 3];

pub const CORTEX_COLOR: Rgb = [0, 200, 0];
pub const LANDMARK_COLOR: Rgb = [255, 0, 255];
/// Posterior offset, femoral diameter, anterior offset.
pub const SEGMENT_COLORS: [Rgb; 3] = [[255, 40, 40], [255, 210, 0], [0, 200, 255]];
const TEXT_COLOR: Rgb = [255, 255, 255];

struct Canvas {
    img: RasterImage,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x >= 0 && y >= 0 && (x as usize) < self.img.width() && (y as usize) < self.img.height() {
            self.img.pixel_mut(x as usize, y as usize).copy_from_slice(&c);
        }
    }

    fn dot(&mut self, p: Point2, r: i64, c: Rgb) {
        let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }

    /// Bresenham segment, `thick` pixels wide in the minor axis.
    fn segment(&mut self, a: Point2, b: Point2, thick: i64, c: Rgb) {
        let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
        let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let steep = -dy > dx;
        let mut err = dx + dy;
        loop {
            for t in 0..thick {
                if steep {
                    self.put(x0 + t, y0, c);
                } else {
                    self.put(x0, y0 + t, c);
                }
            }
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    fn text(&mut self, x: i64, y: i64, scale: i64, s: &str, c: Rgb) {
        let mut cx = x;
        for ch in s.chars() {
            let g = glyph(ch);
            for (row, bits) in g.iter().enumerate() {
                for col in 0..5 {
                    if bits & (0x10 >> col) != 0 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                self.put(cx + col as i64 * scale + sx, y + row as i64 * scale + sy, c);
                            }
                        }
                    }
                }
            }
            cx += 6 * scale;
        }
    }
}

/// 5x7 bitmaps, one byte per row, high bit leftmost.
fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        '=' => [0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        _ => [0; 7],
    }
}

/// Orthogonal projection of `p` onto the infinite line `l`.
fn foot(p: Point2, l: &Line2) -> Point2 {
    let (a, b) = (l.p1(), l.p2());
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy);
    Point2::new(a.x + t * dx, a.y + t * dy)
}

fn line_span(l: &Line2, y0: f64, y1: f64) -> Option<(Point2, Point2)> {
    Some((Point2::new(l.x_at(y0)?, y0), Point2::new(l.x_at(y1)?, y1)))
}

/// Draws the six landmarks, both cortex lines extended to the condylar
/// row, segments A (posterior offset), B (femoral diameter) and C
/// (anterior offset), and the two ratios.
pub fn overlay(original: &RasterImage, lm: &LandmarkSet, m: &Measurement) -> Result<RasterImage, IoError> {
    let base = match original.channels() {
        1 => original.to_rgb(),
        3 => original.clone(),
        c => return Err(ImagingError::WrongChannelCount { expected: 3, actual: c }.into()),
    };
    let mut cv = Canvas { img: base };
    let thick = ((original.height() as f64 / 336.0).round() as i64).max(1);
    let y_end = lm.edge_left.y.max(lm.edge_right.y);
    for l in [&lm.cortex_left, &lm.cortex_right] {
        if let Some((a, b)) = line_span(l, 0.0, y_end) {
            cv.segment(a, b, thick, CORTEX_COLOR);
        }
    }
    let (post, post_line, ant, ant_line) = match m.posterior_side {
        PosteriorSide::ImageLeft => (lm.edge_left, &lm.cortex_left, lm.edge_right, &lm.cortex_right),
        PosteriorSide::ImageRight => (lm.edge_right, &lm.cortex_right, lm.edge_left, &lm.cortex_left),
    };
    let d_from = lm.cortex_points[2];
    cv.segment(post, foot(post, post_line), thick, SEGMENT_COLORS[0]);
    cv.segment(d_from, foot(d_from, &lm.cortex_right), thick, SEGMENT_COLORS[1]);
    cv.segment(ant, foot(ant, ant_line), thick, SEGMENT_COLORS[2]);
    let r = 2 + 2 * thick;
    for p in [lm.edge_left, lm.edge_right].iter().chain(lm.cortex_points.iter()) {
        cv.dot(*p, r, LANDMARK_COLOR);
    }
    let scale = thick * 2;
    let text_y = 10 * thick;
    cv.text(10 * thick, text_y, scale, &format!("PCOR={:.3}", m.pcor), TEXT_COLOR);
    cv.text(
        10 * thick,
        text_y + 10 * scale,
        scale,
        &format!("ACOR={:.3}", m.acor),
        TEXT_COLOR,
    );
    Ok(cv.img)
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in it {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return (0.0, 1.0);
            }
            let pad = ((hi - lo) * 0.05).max(1e-6);
            (lo - pad, hi + pad)
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{title}</text>"#,
        W / 2.0
    );
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, x, y, anchor) in [
        (f.x0, l, b + 14.0, "start"),
        (f.x1, r, b + 14.0, "end"),
        (f.y0, l - 4.0, b, "end"),
        (f.y1, l - 4.0, t + 8.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    s
}

/// Model against truth with the identity line.
pub fn scatter_svg(title: &str, model: &[f64], truth: &[f64]) -> String {
    let all = || truth.iter().chain(model).copied();
    let f = Frame::new(all(), all());
    let mut s = svg_open(title, "ground truth", "model", &f);
    let (lo, hi) = (f.x0.max(f.y0), f.x1.min(f.y1));
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        f.px(lo),
        f.py(lo),
        f.px(hi),
        f.py(hi)
    );
    for (t, m) in truth.iter().zip(model) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            f.px(*t),
            f.py(*m)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn histogram_svg(title: &str, h: &Histogram) -> String {
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let f = Frame {
        x0: h.edges[0],
        x1: *h.edges.last().unwrap_or(&1.0),
        y0: 0.0,
        y1: max,
    };
    let mut s = svg_open(title, "model - truth", "count", &f);
    for (i, &c) in h.counts.iter().enumerate() {
        let (xa, xb) = (f.px(h.edges[i]), f.px(h.edges[i + 1]));
        let (ya, yb) = (f.py(c as f64), f.py(0.0));
        let _ = writeln!(
            s,
            r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="steelblue" stroke="white"/>"#,
            (xb - xa).max(0.0),
            (yb - ya).max(0.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Differences against pair means with the bias and 95% limits.
pub fn bland_altman_svg(title: &str, ba: &BlandAltman) -> String {
    let xs = ba.points.iter().map(|p| p.0);
    let ys = ba
        .points
        .iter()
        .map(|p| p.1)
        .chain([ba.loa_low, ba.loa_high, ba.mean_diff]);
    let f = Frame::new(xs, ys);
    let mut s = svg_open(title, "mean of model and truth", "model - truth", &f);
    for (v, dash, label) in [
        (ba.mean_diff, "", "mean"),
        (ba.loa_high, r#" stroke-dasharray="5 3""#, "+1.96 SD"),
        (ba.loa_low, r#" stroke-dasharray="5 3""#, "-1.96 SD"),
    ] {
        let y = f.py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="firebrick"{dash}/>"#,
            W - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" fill="firebrick">{label} {v:.4}</text>"#,
            W - MARGIN,
            y - 3.0
        );
    }
    for (mx, d) in &ba.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            f.px(*mx),
            f.py(*d)
        );
    }
    s.push_str("</svg>\n");
    s
}
