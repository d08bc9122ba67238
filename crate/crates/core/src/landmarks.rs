//! The six anatomical landmarks: anterior/posterior condylar edge points of
//! the femoral component and two points on each femoral shaft cortex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_from_points, GeometryError, Line2, Point2};
use crate::imaging::{crop, CropRect, ImagingError, RasterImage};
use crate::segmentation::Contour;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LandmarkError {
    #[error("contour is empty")]
    EmptyContour,
    #[error("shaft patch is empty: {0}")]
    EmptyPatch(String),
    #[error("no edge pixels on cortex row {row}")]
    NoEdgePixels { row: usize },
    #[error("cortex row {row}: edge separation {separation} px below minimum {min_sep} px")]
    CortexTooNarrow {
        row: usize,
        separation: usize,
        min_sep: usize,
    },
    #[error("cortex row {row} outside patch of height {height}")]
    RowOutOfRange { row: usize, height: usize },
    #[error("invalid ROI configuration: {0}")]
    InvalidConfig(String),
    #[error("landmark invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiConfig {
    pub condyle_rect: CropRect,
    pub shaft_extension: usize,
    pub cortex_rows: [usize; 2],
    pub min_sep: usize,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self {
            condyle_rect: CropRect::new(500, 900, 224, 448),
            shaft_extension: 50,
            cortex_rows: [100, 140],
            min_sep: 10,
        }
    }
}

impl RoiConfig {
    pub fn validate(&self) -> Result<(), LandmarkError> {
        let r = self.condyle_rect;
        if r.x0 >= r.x1 || r.y0 >= r.y1 {
            return Err(LandmarkError::InvalidConfig(format!("empty condyle rect {r:?}")));
        }
        if self.cortex_rows[0] == self.cortex_rows[1] {
            return Err(LandmarkError::InvalidConfig("cortex rows must be distinct".into()));
        }
        Ok(())
    }

    /// The same ROI for an image magnified by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: usize| (v as f64 * factor).round() as usize;
        let r = self.condyle_rect;
        Self {
            condyle_rect: CropRect::new(s(r.x0), s(r.x1), s(r.y0), s(r.y1)),
            shaft_extension: s(self.shaft_extension),
            cortex_rows: self.cortex_rows.map(s),
            min_sep: s(self.min_sep).max(1),
        }
    }
}

/// Landmarks in original-image coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub edge_left: Point2,
    pub edge_right: Point2,
    pub cortex_left: Line2,
    pub cortex_right: Line2,
    /// Left and right cortex points on the first row, then on the second.
    pub cortex_points: [Point2; 4],
}

impl LandmarkSet {
    pub fn from_points(edges: (Point2, Point2), cortex: [Point2; 4]) -> Result<Self, LandmarkError> {
        Ok(Self {
            edge_left: edges.0,
            edge_right: edges.1,
            cortex_left: line_from_points(cortex[0], cortex[2])?,
            cortex_right: line_from_points(cortex[1], cortex[3])?,
            cortex_points: cortex,
        })
    }

    /// Checks edge ordering and that the cortex lines stay apart (left
    /// strictly left of right) over the rows `y_range.0..=y_range.1`.
    pub fn validate(&self, y_range: (f64, f64)) -> Result<(), LandmarkError> {
        if !(self.edge_left.x < self.edge_right.x) {
            return Err(LandmarkError::InvariantViolation(format!(
                "left edge x {} not left of right edge x {}",
                self.edge_left.x, self.edge_right.x
            )));
        }
        let cp = &self.cortex_points;
        for (p, q) in [(cp[0], cp[1]), (cp[2], cp[3])] {
            if !(p.x < q.x) {
                return Err(LandmarkError::InvariantViolation(format!(
                    "cortex points on row {} are not ordered: left x {} right x {}",
                    p.y, p.x, q.x
                )));
            }
        }
        for y in [y_range.0, y_range.1] {
            let (Some(l), Some(r)) = (self.cortex_left.x_at(y), self.cortex_right.x_at(y)) else {
                return Err(LandmarkError::InvariantViolation("horizontal cortex line".into()));
            };
            if !(l < r) {
                return Err(LandmarkError::InvariantViolation(format!(
                    "cortex lines cross within the shaft patch (row {y}: left x {l:.2}, right x {r:.2})"
                )));
            }
        }
        Ok(())
    }
}

/// Leftmost and rightmost contour points; among equal x the larger y wins.
pub fn condylar_edge_points(c: &Contour) -> Result<(Point2, Point2), LandmarkError> {
    let first = *c.points.first().ok_or(LandmarkError::EmptyContour)?;
    let mut left = first;
    let mut right = first;
    for &p in &c.points[1..] {
        if p.x < left.x || (p.x == left.x && p.y > left.y) {
            left = p;
        }
        if p.x > right.x || (p.x == right.x && p.y > right.y) {
            right = p;
        }
    }
    Ok((left, right))
}

pub fn remap_to_original(p: Point2, r: CropRect) -> Point2 {
    p.translate(r.x0 as f64, r.y0 as f64)
}

/// The region above the condylar edge points, widened by `ext` columns on
/// each side: columns `[left.x - ext, right.x + ext)` clipped to the image,
/// rows `[0, min(left.y, right.y))`.
pub fn shaft_patch(
    original: &RasterImage,
    left: Point2,
    right: Point2,
    ext: usize,
) -> Result<(RasterImage, CropRect), LandmarkError> {
    let (w, h) = (original.width() as f64, original.height() as f64);
    if !(left.x < right.x) {
        return Err(LandmarkError::InvariantViolation(format!(
            "shaft patch needs left.x < right.x, got {} and {}",
            left.x, right.x
        )));
    }
    for p in [left, right] {
        if !(p.x >= 0.0 && p.y >= 0.0 && p.x < w && p.y < h) {
            return Err(LandmarkError::InvariantViolation(format!(
                "edge point ({}, {}) outside {}x{} image",
                p.x, p.y, w, h
            )));
        }
    }
    let x0 = (left.x.round() as usize).saturating_sub(ext);
    let x1 = (right.x.round() as usize + ext).min(original.width());
    let y1 = left.y.min(right.y).round() as usize;
    if y1 == 0 {
        return Err(LandmarkError::EmptyPatch("edge points lie on row 0".into()));
    }
    let rect = CropRect::new(x0, x1, 0, y1);
    Ok((crop(original, rect)?, rect))
}

/// Leftmost and rightmost edge pixels on each of the two rows, returned as
/// `[left@row0, right@row0, left@row1, right@row1]` in patch coordinates.
pub fn cortex_points(edges: &RasterImage, rows: [usize; 2], min_sep: usize) -> Result<[Point2; 4], LandmarkError> {
    let mut out = [Point2::new(0.0, 0.0); 4];
    for (k, &row) in rows.iter().enumerate() {
        if row >= edges.height() {
            return Err(LandmarkError::RowOutOfRange {
                row,
                height: edges.height(),
            });
        }
        let mut hits = (0..edges.width()).filter(|&x| edges.get(x, row) != 0);
        let first = hits.next().ok_or(LandmarkError::NoEdgePixels { row })?;
        let last = hits.next_back().unwrap_or(first);
        let separation = last - first;
        if separation < min_sep {
            return Err(LandmarkError::CortexTooNarrow {
                row,
                separation,
                min_sep,
            });
        }
        out[2 * k] = Point2::new(first as f64, row as f64);
        out[2 * k + 1] = Point2::new(last as f64, row as f64);
    }
    Ok(out)
}

/// Remaps crop-local edge points and patch-local cortex points into the
/// original image and pairs the cortex points into lines.
pub fn build_landmarks(
    edge_pts: (Point2, Point2),
    cortex_pts: [Point2; 4],
    patch_rect: CropRect,
    condyle_rect: CropRect,
) -> Result<LandmarkSet, LandmarkError> {
    let edges = (
        remap_to_original(edge_pts.0, condyle_rect),
        remap_to_original(edge_pts.1, condyle_rect),
    );
    let cortex = cortex_pts.map(|p| remap_to_original(p, patch_rect));
    let lm = LandmarkSet::from_points(edges, cortex)?;
    lm.validate((patch_rect.y0 as f64, patch_rect.y1 as f64 - 1.0))?;
    Ok(lm)
}
