//! Condylar offset measurement on postoperative lateral knee radiographs.
//!
//! The pipeline isolates the femoral component by color k-means, takes its
//! anterior/posterior extremal points, fits the two femoral shaft cortex
//! lines from a Canny edge map, and reports the condylar offsets and their
//! ratios to the femoral diameter. A phantom generator with analytic ground
//! truth and an agreement-statistics module support validation.

// `!(a < b)` is used on purpose: it rejects NaN along with the ordered failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod landmarks;
pub mod measurement;
pub mod phantom;
pub mod pipeline;
pub mod records;
pub mod segmentation;
pub mod stats;

pub use geometry::{GeometryError, Line2, Point2};
pub use imaging::{CropRect, ImagingError, RasterImage};
pub use landmarks::{LandmarkError, LandmarkSet, RoiConfig};
pub use measurement::{Limb, Measurement, MeasurementError, PosteriorSide, SideConvention};
pub use pipeline::{PipelineConfig, PipelineError, PipelineOutput, Stage};
