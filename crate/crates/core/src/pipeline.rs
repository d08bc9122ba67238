//! End-to-end measurement of one radiograph.
//!
//! preprocess: crop the condylar ROI, bilateral filter, grayscale, Otsu
//! to-zero threshold. segment: k-means on the thresholded crop, largest
//! contour of the brightest cluster. landmarks: condylar extremes, shaft
//! patch above them, Canny, cortex scan. measure: offsets and ratios.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::imaging::{self, CropRect, ImagingError, RasterImage};
use crate::landmarks::{self, LandmarkSet, RoiConfig};
use crate::measurement::{self, Measurement, SideConvention};
use crate::segmentation::{self, Contour, KmeansParams, KmeansWarning};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    pub d: usize,
    pub sigma_color: f64,
    pub sigma_space: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            d: 30,
            sigma_color: 100.0,
            sigma_space: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self { low: 50.0, high: 150.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub roi: RoiConfig,
    pub bilateral: BilateralParams,
    pub kmeans: KmeansParams,
    pub canny: CannyParams,
    pub side: SideConvention,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Preprocess,
    Segment,
    Landmarks,
    Measure,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Segment => "segment",
            Stage::Landmarks => "landmarks",
            Stage::Measure => "measure",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn at(stage: Stage) -> impl Fn(&dyn fmt::Display) -> PipelineError {
        move |e| PipelineError {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub measurement: Measurement,
    pub landmarks: LandmarkSet,
    /// Femoral component boundary in original-image coordinates.
    pub contour: Contour,
    pub condyle_rect: CropRect,
    pub patch_rect: CropRect,
}

fn rgb(img: &RasterImage) -> Result<RasterImage, ImagingError> {
    match img.channels() {
        3 => Ok(img.clone()),
        1 => Ok(img.to_rgb()),
        c => Err(ImagingError::WrongChannelCount { expected: 3, actual: c }),
    }
}

fn smooth_gray(img: &RasterImage, p: &BilateralParams) -> Result<RasterImage, ImagingError> {
    let f = imaging::bilateral_filter(&rgb(img)?, p.d, p.sigma_color, p.sigma_space)?;
    imaging::to_grayscale(&f)
}

fn rgb_triples(img: &RasterImage) -> Vec<[u8; 3]> {
    img.pixels().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

pub fn run(original: &RasterImage, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let mut warnings = Vec::new();

    let pre = PipelineError::at(Stage::Preprocess);
    cfg.roi.validate().map_err(|e| pre(&e))?;
    let rect = cfg.roi.condyle_rect;
    let crop = imaging::crop(original, rect).map_err(|e| pre(&e))?;
    let gray = smooth_gray(&crop, &cfg.bilateral).map_err(|e| pre(&e))?;
    let thresholded = match imaging::otsu_threshold(&gray) {
        Ok(t) => imaging::threshold_to_zero(&gray, t),
        Err(ImagingError::DegenerateHistogram { value }) => {
            warnings.push(format!("uniform condylar region (value {value}); threshold skipped"));
            gray
        }
        Err(e) => return Err(pre(&e)),
    };

    let seg = PipelineError::at(Stage::Segment);
    let model = segmentation::kmeans_rgb(&rgb_triples(&thresholded.to_rgb()), cfg.kmeans).map_err(|e| seg(&e))?;
    for w in &model.warnings {
        let KmeansWarning::TooFewColors { distinct, k } = w;
        warnings.push(format!("only {distinct} distinct colors for k={k}"));
    }
    let mask = segmentation::cluster_mask(
        &model,
        segmentation::brightest_cluster(&model),
        crop.width(),
        crop.height(),
    )
    .map_err(|e| seg(&e))?;
    let contours = segmentation::external_contours(&mask);
    let contour = segmentation::largest_contour(&contours).map_err(|e| seg(&e))?;

    let lmk = PipelineError::at(Stage::Landmarks);
    let (left, right) = landmarks::condylar_edge_points(contour).map_err(|e| lmk(&e))?;
    let (l_abs, r_abs) = (
        landmarks::remap_to_original(left, rect),
        landmarks::remap_to_original(right, rect),
    );
    let (patch, patch_rect) =
        landmarks::shaft_patch(original, l_abs, r_abs, cfg.roi.shaft_extension).map_err(|e| lmk(&e))?;
    let patch_gray = smooth_gray(&patch, &cfg.bilateral).map_err(|e| lmk(&e))?;
    let edges = imaging::canny(&patch_gray, cfg.canny.low, cfg.canny.high).map_err(|e| lmk(&e))?;
    let cortex = landmarks::cortex_points(&edges, cfg.roi.cortex_rows, cfg.roi.min_sep).map_err(|e| lmk(&e))?;
    let lm = landmarks::build_landmarks((left, right), cortex, patch_rect, rect).map_err(|e| lmk(&e))?;

    let mut m = measurement::measure(&lm, &cfg.side).map_err(|e| PipelineError::at(Stage::Measure)(&e))?;
    warnings.append(&mut m.warnings);
    m.warnings = warnings;

    let contour = Contour {
        points: contour
            .points
            .iter()
            .map(|&p| landmarks::remap_to_original(p, rect))
            .collect(),
    };
    Ok(PipelineOutput {
        measurement: m,
        landmarks: lm,
        contour,
        condyle_rect: rect,
        patch_rect,
    })
}
