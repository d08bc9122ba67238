//! Offsets, femoral diameter and the magnification-free offset ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_line_distance, Line2};
use crate::landmarks::LandmarkSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("degenerate femoral diameter {0} px (coincident cortex lines)")]
    DegenerateDiameter(f64),
}

/// Which side of the image the posterior condyle projects toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosteriorSide {
    ImageLeft,
    ImageRight,
}

impl PosteriorSide {
    pub fn as_str(self) -> &'static str {
        match self {
            PosteriorSide::ImageLeft => "ImageLeft",
            PosteriorSide::ImageRight => "ImageRight",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limb {
    Left,
    Right,
    Unknown,
}

impl Limb {
    pub fn as_str(self) -> &'static str {
        match self {
            Limb::Left => "Left",
            Limb::Right => "Right",
            Limb::Unknown => "Unknown",
        }
    }
}

/// Maps the posterior side to a knee label. This is a viewing convention:
/// a lateral film alone does not establish laterality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideConvention {
    pub image_left_posterior: Limb,
    pub image_right_posterior: Limb,
}

impl Default for SideConvention {
    fn default() -> Self {
        Self {
            image_left_posterior: Limb::Right,
            image_right_posterior: Limb::Left,
        }
    }
}

impl SideConvention {
    pub fn limb(&self, side: PosteriorSide) -> Limb {
        match side {
            PosteriorSide::ImageLeft => self.image_left_posterior,
            PosteriorSide::ImageRight => self.image_right_posterior,
        }
    }
}

pub const LIMB_BASIS: &str = "side-convention";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub aco_px: f64,
    pub pco_px: f64,
    pub fd_px: f64,
    pub acor: f64,
    pub pcor: f64,
    pub posterior_side: PosteriorSide,
    pub limb: Limb,
    /// How `limb` was derived; always the configured side convention.
    #[serde(default = "limb_basis_default")]
    pub limb_basis: String,
    pub warnings: Vec<String>,
}

fn limb_basis_default() -> String {
    LIMB_BASIS.to_string()
}

/// Relative disagreement between the two per-point diameters above which
/// the cortices are reported as non-parallel.
const PARALLEL_TOLERANCE: f64 = 0.10;
/// Below this pco/aco ratio the anterior/posterior assignment is flagged.
const SIDE_MARGIN: f64 = 2.0;

/// Mean perpendicular distance from the two points defining `a` to line `b`.
pub fn femoral_diameter(a: &Line2, b: &Line2) -> Result<(f64, Vec<String>), MeasurementError> {
    let d1 = point_line_distance(a.p1(), b);
    let d2 = point_line_distance(a.p2(), b);
    let fd = (d1 + d2) / 2.0;
    if !(fd > 0.0) || !fd.is_finite() {
        return Err(MeasurementError::DegenerateDiameter(fd));
    }
    let mut warnings = Vec::new();
    if (d1 - d2).abs() > PARALLEL_TOLERANCE * fd {
        warnings.push(format!(
            "cortex lines are not parallel: per-point diameters {d1:.2} px and {d2:.2} px"
        ));
    }
    Ok((fd, warnings))
}

/// Each condylar extremum measured against the cortex line on its own side.
pub fn condylar_offsets(lm: &LandmarkSet) -> (f64, f64) {
    (
        point_line_distance(lm.edge_left, &lm.cortex_left),
        point_line_distance(lm.edge_right, &lm.cortex_right),
    )
}

/// The side with the larger offset is posterior; a tie goes to the image
/// right with a warning.
pub fn classify_posterior(offset_left: f64, offset_right: f64) -> (PosteriorSide, Option<String>) {
    if offset_left > offset_right {
        (PosteriorSide::ImageLeft, None)
    } else if offset_right > offset_left {
        (PosteriorSide::ImageRight, None)
    } else {
        (
            PosteriorSide::ImageRight,
            Some(format!(
                "equal condylar offsets ({offset_left:.2} px); posterior side defaulted to image right"
            )),
        )
    }
}

pub fn measure(lm: &LandmarkSet, conv: &SideConvention) -> Result<Measurement, MeasurementError> {
    let (fd, mut warnings) = femoral_diameter(&lm.cortex_left, &lm.cortex_right)?;
    let (left, right) = condylar_offsets(lm);
    let (side, tie) = classify_posterior(left, right);
    warnings.extend(tie);
    let pco = left.max(right);
    let aco = left.min(right);
    if aco > 0.0 && pco / aco < SIDE_MARGIN {
        warnings.push(format!(
            "posterior/anterior offsets are close ({pco:.2} vs {aco:.2} px); side assignment is uncertain"
        ));
    }
    Ok(Measurement {
        aco_px: aco,
        pco_px: pco,
        fd_px: fd,
        acor: aco / fd,
        pcor: pco / fd,
        posterior_side: side,
        limb: conv.limb(side),
        limb_basis: LIMB_BASIS.to_string(),
        warnings,
    })
}
