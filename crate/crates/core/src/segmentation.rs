//! Femoral component isolation: Lloyd k-means over RGB pixels, brightest
//! cluster masking, outer-border contour tracing and largest-area selection.

use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::imaging::RasterImage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("k-means needs at least one pixel")]
    EmptyInput,
    #[error("invalid k-means parameters: {0}")]
    InvalidParams(String),
    #[error("cluster index {idx} out of range for k = {k}")]
    BadIndex { idx: usize, k: usize },
    #[error("mask dimensions {width}x{height} do not match {labels} labels")]
    DimensionMismatch { width: usize, height: usize, labels: usize },
    #[error("no contours found")]
    EmptyContourList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KmeansWarning {
    /// Fewer distinct colors than clusters; some centers start duplicated.
    TooFewColors { distinct: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centers: Vec<[f64; 3]>,
    pub labels: Vec<u32>,
    pub inertia: f64,
    /// Inertia after every assignment step, initial assignment first.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub warnings: Vec<KmeansWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            k: 4,
            eps: 1.0,
            max_iter: 10,
            seed: 0,
        }
    }
}

fn dist2(p: [u8; 3], c: &[f64; 3]) -> f64 {
    let d0 = p[0] as f64 - c[0];
    let d1 = p[1] as f64 - c[1];
    let d2 = p[2] as f64 - c[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

fn assign(pixels: &[[u8; 3]], centers: &[[f64; 3]], labels: &mut [u32]) -> f64 {
    let mut inertia = 0.0;
    for (p, label) in pixels.iter().zip(labels.iter_mut()) {
        let mut best = 0usize;
        let mut best_d = dist2(*p, &centers[0]);
        for (j, c) in centers.iter().enumerate().skip(1) {
            let d = dist2(*p, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        *label = best as u32;
        inertia += best_d;
    }
    inertia
}

/// Lloyd's k-means over RGB triples.
///
/// Centers start at `k` distinct pixel colors drawn with a ChaCha8 generator
/// seeded from `seed`. Each iteration recenters every cluster on the mean of
/// its pixels (an empty cluster keeps its center) and reassigns pixels to the
/// nearest center, ties to the lower index. Iteration stops once no center
/// moves by `eps` or more, at a fixed point, or after `max_iter` iterations.
/// The returned labels are always the nearest-center assignment for the
/// returned centers.
pub fn kmeans_rgb(pixels: &[[u8; 3]], params: KmeansParams) -> Result<ClusterModel, SegmentationError> {
    let KmeansParams { k, eps, max_iter, seed } = params;
    if pixels.is_empty() {
        return Err(SegmentationError::EmptyInput);
    }
    if k == 0 {
        return Err(SegmentationError::InvalidParams("k must be >= 1".into()));
    }
    if !(eps >= 0.0) {
        return Err(SegmentationError::InvalidParams(format!("eps must be >= 0, got {eps}")));
    }

    let mut distinct: Vec<[u8; 3]> = pixels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut centers: Vec<[f64; 3]> = if distinct.len() >= k {
        index::sample(&mut rng, distinct.len(), k)
            .into_iter()
            .map(|i| distinct[i].map(f64::from))
            .collect()
    } else {
        warnings.push(KmeansWarning::TooFewColors {
            distinct: distinct.len(),
            k,
        });
        let mut cs: Vec<[f64; 3]> = distinct.iter().map(|c| c.map(f64::from)).collect();
        while cs.len() < k {
            let i = rng.random_range(0..distinct.len());
            cs.push(distinct[i].map(f64::from));
        }
        cs
    };

    let mut labels = vec![0u32; pixels.len()];
    let mut inertia = assign(pixels, &centers, &mut labels);
    let mut history = vec![inertia];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![[0u64; 3]; k];
        let mut counts = vec![0u64; k];
        for (p, &l) in pixels.iter().zip(&labels) {
            let s = &mut sums[l as usize];
            s[0] += p[0] as u64;
            s[1] += p[1] as u64;
            s[2] += p[2] as u64;
            counts[l as usize] += 1;
        }
        let mut shift = 0.0f64;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let n = counts[j] as f64;
            let new = sums[j].map(|s| s as f64 / n);
            let d = ((new[0] - centers[j][0]).powi(2)
                + (new[1] - centers[j][1]).powi(2)
                + (new[2] - centers[j][2]).powi(2))
            .sqrt();
            shift = shift.max(d);
            centers[j] = new;
        }
        inertia = assign(pixels, &centers, &mut labels);
        history.push(inertia);
        if shift < eps || shift == 0.0 {
            break;
        }
    }

    Ok(ClusterModel {
        k,
        centers,
        labels,
        inertia,
        inertia_history: history,
        iterations,
        warnings,
    })
}

/// Index of the center nearest to white.
pub fn brightest_cluster(model: &ClusterModel) -> usize {
    let white = [255.0, 255.0, 255.0];
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in model.centers.iter().enumerate() {
        let d = (0..3).map(|k| (c[k] - white[k]).powi(2)).sum::<f64>().sqrt();
        // Equidistant centers: the lexicographically greater one wins, so the
        // choice does not depend on cluster order.
        if d < best_d || (d == best_d && c.partial_cmp(&model.centers[best]) == Some(std::cmp::Ordering::Greater)) {
            best_d = d;
            best = i;
        }
    }
    best
}

pub fn cluster_mask(
    model: &ClusterModel,
    idx: usize,
    width: usize,
    height: usize,
) -> Result<RasterImage, SegmentationError> {
    if idx >= model.k {
        return Err(SegmentationError::BadIndex { idx, k: model.k });
    }
    if width * height != model.labels.len() {
        return Err(SegmentationError::DimensionMismatch {
            width,
            height,
            labels: model.labels.len(),
        });
    }
    let px = model
        .labels
        .iter()
        .map(|&l| if l as usize == idx { 255 } else { 0 })
        .collect();
    RasterImage::new(width, height, 1, px).map_err(|e| SegmentationError::InvalidParams(e.to_string()))
}

/// Closed boundary trace; consecutive points (and last/first) are 8-neighbors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point2>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Clockwise on screen (y grows downward), starting east.
const RING: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const WEST: usize = 4;

fn ring_index(dx: isize, dy: isize) -> usize {
    RING.iter().position(|&d| d == (dx, dy)).expect("8-neighbor offset")
}

struct Grid<'a> {
    w: usize,
    h: usize,
    fg: &'a [bool],
}

impl Grid<'_> {
    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.fg[y as usize * self.w + x as usize]
    }
}

/// Outer borders of every 8-connected foreground (non-zero) component,
/// in raster order of each component's first pixel. Holes are not traced.
pub fn external_contours(mask: &RasterImage) -> Vec<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let fg: Vec<bool> = mask.pixels().iter().step_by(mask.channels()).map(|&v| v != 0).collect();
    let grid = Grid { w, h, fg: &fg };

    let mut label = vec![u32::MAX; w * h];
    let mut next = 0u32;
    let mut contours = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !fg[i] || label[i] != u32::MAX {
                continue;
            }
            // First pixel of a new component in raster order: its west
            // neighbor is background, which is the outer-border start rule.
            label[i] = next;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for &(dx, dy) in &RING {
                    let (nx, ny) = (jx + dx, jy + dy);
                    if grid.at(nx, ny) {
                        let n = ny as usize * w + nx as usize;
                        if label[n] == u32::MAX {
                            label[n] = next;
                            queue.push_back(n);
                        }
                    }
                }
            }
            next += 1;
            contours.push(trace_outer_border(&grid, x as isize, y as isize));
        }
    }
    contours
}

fn trace_outer_border(grid: &Grid<'_>, sx: isize, sy: isize) -> Contour {
    let start = (sx, sy);
    let mut first = None;
    for k in 0..8 {
        let (dx, dy) = RING[(WEST + k) % 8];
        if grid.at(sx + dx, sy + dy) {
            first = Some((sx + dx, sy + dy));
            break;
        }
    }
    let Some(p1) = first else {
        return Contour {
            points: vec![Point2::new(sx as f64, sy as f64)],
        };
    };

    let mut points = Vec::new();
    let (mut prev, mut cur) = (p1, start);
    // A border visits each pixel at most four times.
    let cap = 4 * grid.w * grid.h + 8;
    for _ in 0..cap {
        let from = ring_index(prev.0 - cur.0, prev.1 - cur.1);
        let mut found = cur;
        for k in 1..=8 {
            let (dx, dy) = RING[(from + 8 - k) % 8];
            if grid.at(cur.0 + dx, cur.1 + dy) {
                found = (cur.0 + dx, cur.1 + dy);
                break;
            }
        }
        points.push(Point2::new(cur.0 as f64, cur.1 as f64));
        if found == start && cur == p1 {
            break;
        }
        prev = cur;
        cur = found;
    }
    Contour { points }
}

/// Shoelace area of the polygon through the contour's pixel centers.
pub fn contour_area(c: &Contour) -> f64 {
    let n = c.points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = c.points[i];
        let b = c.points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    (acc / 2.0).abs()
}

/// Index of the contour with the largest area; ties go to the earliest.
pub fn largest_contour_index(cs: &[Contour]) -> Result<usize, SegmentationError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cs.iter().enumerate() {
        let a = contour_area(c);
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i).ok_or(SegmentationError::EmptyContourList)
}

pub fn largest_contour(cs: &[Contour]) -> Result<&Contour, SegmentationError> {
    largest_contour_index(cs).map(|i| &cs[i])
}
