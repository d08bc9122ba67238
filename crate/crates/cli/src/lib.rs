//! Commands behind the `cor` binary: single-image measurement, batch
//! processing, phantom corpus generation and agreement validation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use cor_core::config::ConfigError;
use cor_core::io::{self, IoError};
use cor_core::phantom::{self, PhantomError, PhantomSpec, PhantomTruth, SweepSpec};
use cor_core::pipeline::{self, PipelineConfig, PipelineError, PipelineOutput, Stage};
use cor_core::records::{self, RecordError, ResultRow};
use cor_core::stats::{self, AgreementReport, StatsError};
use cor_core::{Measurement, RasterImage};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Phantom(#[from] PhantomError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::File {
        path: path.display().to_string(),
        source,
    }
}

pub const DEFAULT_OUT: &str = "out";

pub fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(file_err(&dir))?;
    Ok(dir)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(file_err(path))
}

/// Decode failures are reported against the preprocess stage.
pub fn load(path: &Path) -> Result<RasterImage, PipelineError> {
    io::read_image(path).map_err(|e| PipelineError {
        stage: Stage::Preprocess,
        message: e.to_string(),
    })
}

pub struct MeasureResult {
    pub output: PipelineOutput,
    pub overlay_path: PathBuf,
}

/// Measures one image and writes `<stem>_overlay.png` to the output dir.
pub fn cmd_measure(image: &Path, cfg: &PipelineConfig) -> Result<MeasureResult, CliError> {
    let img = load(image)?;
    let output = pipeline::run(&img, cfg)?;
    let drawn = io::overlay(&img, &output.landmarks, &output.measurement)?;
    let overlay_path = out_dir(cfg)?.join(format!("{}_overlay.png", stem(image)));
    write_bytes(&overlay_path, &io::encode_png(&drawn)?)?;
    Ok(MeasureResult { output, overlay_path })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchItem {
    pub filename: String,
    pub measurement: Option<Measurement>,
    pub error: Option<PipelineError>,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub items: Vec<BatchItem>,
    pub ok: usize,
    pub failed: usize,
    pub warnings: Vec<String>,
    pub csv_path: PathBuf,
}

pub const RESULTS_CSV: &str = "results.csv";

fn is_image(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            .unwrap_or(false)
}

/// PNG and JPEG files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(file_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_image(p))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn measure_one(path: &Path, cfg: &PipelineConfig) -> BatchItem {
    let start = Instant::now();
    let result = load(path).and_then(|img| pipeline::run(&img, cfg));
    let filename = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (measurement, error) = match result {
        Ok(o) => (Some(o.measurement), None),
        Err(e) => (None, Some(e)),
    };
    BatchItem {
        filename,
        measurement,
        error,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Measures every image in `dir` on `parallel` workers and writes the
/// results CSV, one row per file in file-name order.
pub fn cmd_batch(dir: &Path, cfg: &PipelineConfig, parallel: usize) -> Result<BatchResult, CliError> {
    let files = list_images(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let items: Vec<BatchItem> = pool.install(|| files.par_iter().map(|p| measure_one(p, cfg)).collect());
    let rows: Vec<ResultRow> = items
        .iter()
        .map(|it| match (&it.measurement, &it.error) {
            (Some(m), _) => ResultRow::ok(&it.filename, m.clone()),
            (None, Some(e)) => ResultRow::failed(&it.filename, e),
            (None, None) => unreachable!("batch item without outcome"),
        })
        .collect();
    let csv_path = out_dir(cfg)?.join(RESULTS_CSV);
    let mut buf = Vec::new();
    records::write_results(&mut buf, &rows)?;
    write_bytes(&csv_path, &buf)?;
    let ok = items.iter().filter(|i| i.measurement.is_some()).count();
    let mut warnings = Vec::new();
    if files.is_empty() {
        warnings.push(format!("no PNG or JPEG files in {}", dir.display()));
    }
    Ok(BatchResult {
        failed: items.len() - ok,
        ok,
        items,
        warnings,
        csv_path,
    })
}

pub enum PhantomRequest {
    Single(PhantomSpec),
    Sweep(SweepSpec),
}

pub const TRUTH_CSV: &str = "truth.csv";

/// Writes `phantom_NNN.png`, `phantom_NNN.json` and `truth.csv` to `dir`.
/// Returns the image paths in order.
pub fn cmd_phantom(req: &PhantomRequest, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    let specs = match req {
        PhantomRequest::Single(s) => vec![s.clone()],
        PhantomRequest::Sweep(s) => phantom::sweep_specs(s)?,
    };
    let width = specs.len().saturating_sub(1).to_string().len().max(3);
    let rendered: Vec<(String, PhantomTruth, Vec<u8>)> = specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<_, CliError> {
            let (img, truth) = phantom::generate(s)?;
            Ok((format!("phantom_{i:0width$}"), truth, io::encode_png(&img)?))
        })
        .collect::<Result<_, _>>()?;
    let mut paths = Vec::with_capacity(rendered.len());
    let mut truth_rows = Vec::with_capacity(rendered.len());
    for (name, truth, png) in rendered {
        let img_path = dir.join(format!("{name}.png"));
        write_bytes(&img_path, &png)?;
        let json = serde_json::to_vec_pretty(&truth)?;
        write_bytes(&dir.join(format!("{name}.json")), &json)?;
        truth_rows.push((format!("{name}.png"), truth));
        paths.push(img_path);
    }
    let mut buf = Vec::new();
    records::write_truth(&mut buf, &truth_rows)?;
    write_bytes(&dir.join(TRUTH_CSV), &buf)?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub acor: AgreementReport,
    pub pcor: AgreementReport,
    pub excluded: Vec<String>,
}

pub const ALPHA: f64 = 0.05;

/// Agreement analysis of predicted against true ratios; writes
/// `report.json` and three SVG plots per ratio.
pub fn cmd_validate(pred: &Path, truth: &Path, out: &Path) -> Result<ValidationReport, CliError> {
    let p = records::read_results(std::fs::File::open(pred).map_err(file_err(pred))?)?;
    let t = records::read_truth(std::fs::File::open(truth).map_err(file_err(truth))?)?;
    let pairs = records::pair_ratios(&p, &t)?;
    let report = ValidationReport {
        acor: stats::agreement_report(&pairs.acor, ALPHA)?,
        pcor: stats::agreement_report(&pairs.pcor, ALPHA)?,
        excluded: pairs.excluded,
    };
    std::fs::create_dir_all(out).map_err(file_err(out))?;
    write_bytes(&out.join("report.json"), &serde_json::to_vec_pretty(&report)?)?;
    for (name, r, series) in [("acor", &report.acor, &pairs.acor), ("pcor", &report.pcor, &pairs.pcor)] {
        let upper = name.to_ascii_uppercase();
        let plots = [
            (
                "scatter",
                io::scatter_svg(&upper, &series.model.values, &series.truth.values),
            ),
            (
                "diff_hist",
                io::histogram_svg(&format!("{upper} differences"), &r.histogram_diff),
            ),
            (
                "bland_altman",
                io::bland_altman_svg(&format!("{upper} Bland-Altman"), &r.bland_altman),
            ),
        ];
        for (kind, svg) in plots {
            write_bytes(&out.join(format!("{name}_{kind}.svg")), svg.as_bytes())?;
        }
    }
    Ok(report)
}
