//! Synthetic lateral knee radiographs with analytically known landmarks.
//!
//! Layout: a tilted femoral shaft band (bone with cortex-intensity borders)
//! runs from the top edge down to the condylar row, where an elliptical
//! femoral component overlays it. A smaller tibial component sits below.
//! The component's extreme x values are whole pixels, so its extremal pixel
//! is unique and lies exactly on the truth landmark. Pixels are classified
//! by their centers; the outer cortex lines cross the condylar row on a
//! pixel boundary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_from_points, Line2, Point2};
use crate::imaging::RasterImage;
use crate::measurement::PosteriorSide;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intensities {
    pub background: u8,
    pub bone: u8,
    pub cortex: u8,
    pub implant: u8,
}

impl Default for Intensities {
    fn default() -> Self {
        Self {
            background: 30,
            bone: 120,
            cortex: 180,
            implant: 250,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub fd_px: f64,
    pub pcor: f64,
    pub acor: f64,
    pub shaft_tilt_deg: f64,
    pub posterior_side: PosteriorSide,
    pub noise_sigma: f64,
    pub intensities: Intensities,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 1378,
            height: 672,
            fd_px: 100.0,
            pcor: 1.0,
            acor: 0.1,
            shaft_tilt_deg: 0.0,
            posterior_side: PosteriorSide::ImageLeft,
            noise_sigma: 0.0,
            intensities: Intensities::default(),
            seed: 0,
        }
    }
}

// Layout constants at the reference 1378x672 size; all scale with the image.
const REF_W: f64 = 1378.0;
const REF_H: f64 = 672.0;
const CONDYLE_Y: f64 = 340.0;
const IMPLANT_CX: f64 = 700.0;
const IMPLANT_B: f64 = 55.0;
const TIBIA_GAP: f64 = 40.0;
const CORTEX_WIDTH: f64 = 8.0;
const CORTEX_ROWS: [f64; 2] = [100.0, 140.0];

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: String| Err(PhantomError::InvalidSpec(m));
        if self.width < 64 || self.height < 64 {
            return bad(format!("image {}x{} is too small", self.width, self.height));
        }
        if !(self.fd_px.is_finite() && self.fd_px > 0.0) {
            return bad(format!("fd_px must be positive, got {}", self.fd_px));
        }
        if !(0.4..=1.8).contains(&self.pcor) {
            return bad(format!("pcor {} outside [0.4, 1.8]", self.pcor));
        }
        if !(0.0..=0.6).contains(&self.acor) {
            return bad(format!("acor {} outside [0, 0.6]", self.acor));
        }
        if !(self.shaft_tilt_deg.is_finite() && self.shaft_tilt_deg.abs() < 30.0) {
            return bad(format!("shaft tilt {} deg outside (-30, 30)", self.shaft_tilt_deg));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        let i = self.intensities;
        if i.implant <= i.background.max(i.bone).max(i.cortex) {
            return bad("implant intensity must be strictly greatest".into());
        }
        Ok(())
    }

    /// Same anatomy rendered at `factor` times the pixel size.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            width: (self.width as f64 * factor).round() as usize,
            height: (self.height as f64 * factor).round() as usize,
            fd_px: self.fd_px * factor,
            ..self.clone()
        }
    }

    fn scale(&self) -> (f64, f64) {
        (self.width as f64 / REF_W, self.height as f64 / REF_H)
    }

    /// Cortex scan rows matching this image size.
    pub fn cortex_rows(&self) -> [usize; 2] {
        let sy = self.scale().1;
        CORTEX_ROWS.map(|r| (r * sy).round() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (u, v) = ((x - self.cx) / self.a, (y - self.cy) / self.b);
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomTruth {
    pub edge_left: Point2,
    pub edge_right: Point2,
    /// [left@r0, right@r0, left@r1, right@r1] on the outer cortex lines.
    pub cortex_points: [Point2; 4],
    pub cortex_rows: [usize; 2],
    pub cortex_left: Line2,
    pub cortex_right: Line2,
    pub aco_px: f64,
    pub pco_px: f64,
    pub fd_px: f64,
    pub acor: f64,
    pub pcor: f64,
    pub posterior_side: PosteriorSide,
    pub implant: Ellipse,
    pub tibia: Ellipse,
    pub spec: PhantomSpec,
}

struct Layout {
    tan: f64,
    cos: f64,
    /// Outer left cortex line x at the condylar row.
    xl_c: f64,
    y_c: f64,
    implant: Ellipse,
    tibia: Ellipse,
    aco: f64,
    pco: f64,
}

impl Layout {
    fn xl(&self, y: f64) -> f64 {
        self.xl_c + (y - self.y_c) * self.tan
    }

    fn xr(&self, y: f64, fd: f64) -> f64 {
        self.xl(y) + fd / self.cos
    }
}

fn layout(spec: &PhantomSpec) -> Result<Layout, PhantomError> {
    let (sx, sy) = spec.scale();
    let theta = spec.shaft_tilt_deg.to_radians();
    let (tan, cos) = (theta.tan(), theta.cos());
    let y_c = (CONDYLE_Y * sy).round();
    let b = (IMPLANT_B * sy).round().max(3.0);
    let fd = spec.fd_px;
    let (pco_req, aco_req) = (spec.pcor * fd, spec.acor * fd);
    let (left_off, right_off) = match spec.posterior_side {
        PosteriorSide::ImageLeft => (pco_req, aco_req),
        PosteriorSide::ImageRight => (aco_req, pco_req),
    };
    // Extremes relative to the left line at the condylar row, then centered.
    let rel_l = -left_off / cos;
    let rel_r = fd / cos + right_off / cos;
    // The left line sits on a pixel boundary at the condylar row.
    let xl_c = (IMPLANT_CX * sx - (rel_l + rel_r) / 2.0).floor() + 0.5;
    // Extremes round outward: truth offsets sit on the half-pixel grid.
    let xe_l = (xl_c + rel_l).floor();
    let xe_r = (xl_c + rel_r).ceil();
    let implant = Ellipse {
        cx: (xe_l + xe_r) / 2.0,
        cy: y_c,
        a: (xe_r - xe_l) / 2.0,
        b,
    };
    let tb = (b * 0.55).round().max(2.0);
    let tibia = Ellipse {
        cx: implant.cx,
        cy: y_c + b + (TIBIA_GAP * sy).round() + tb,
        a: (implant.a * 0.5).max(2.0),
        b: tb,
    };
    // Offsets from the rounded extremes: horizontal gap times cos(theta).
    let left = (xl_c - xe_l) * cos;
    let right = (xe_r - (xl_c + fd / cos)) * cos;
    let (pco, aco) = match spec.posterior_side {
        PosteriorSide::ImageLeft => (left, right),
        PosteriorSide::ImageRight => (right, left),
    };
    let lay = Layout {
        tan,
        cos,
        xl_c,
        y_c,
        implant,
        tibia,
        aco: aco.abs(),
        pco: pco.abs(),
    };
    check_bounds(spec, &lay)?;
    Ok(lay)
}

fn check_bounds(spec: &PhantomSpec, l: &Layout) -> Result<(), PhantomError> {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let inside = |e: &Ellipse| e.cx - e.a >= 1.0 && e.cx + e.a <= w - 2.0 && e.cy - e.b >= 1.0 && e.cy + e.b <= h - 2.0;
    if !inside(&l.implant) {
        return Err(PhantomError::InfeasibleGeometry(format!(
            "implant spans x [{}, {}] in a {}x{} image",
            l.implant.cx - l.implant.a,
            l.implant.cx + l.implant.a,
            spec.width,
            spec.height
        )));
    }
    if !inside(&l.tibia) {
        return Err(PhantomError::InfeasibleGeometry(
            "tibial component leaves the image".into(),
        ));
    }
    let top_l = l.xl(0.0);
    let top_r = l.xr(0.0, spec.fd_px);
    if top_l < 1.0 || top_r > w - 2.0 {
        return Err(PhantomError::InfeasibleGeometry(format!(
            "shaft leaves the image at the top row (x {top_l:.1}..{top_r:.1})"
        )));
    }
    Ok(())
}

fn ellipse_area(e: &Ellipse) -> f64 {
    std::f64::consts::PI * e.a * e.b
}

pub fn truth(spec: &PhantomSpec) -> Result<PhantomTruth, PhantomError> {
    spec.validate()?;
    let l = layout(spec)?;
    if ellipse_area(&l.tibia) >= ellipse_area(&l.implant) {
        return Err(PhantomError::InfeasibleGeometry(
            "tibial component not smaller than implant".into(),
        ));
    }
    let fd = spec.fd_px;
    let rows = spec.cortex_rows();
    let pt = |x: f64, y: f64| Point2::new(x, y);
    let (r0, r1) = (rows[0] as f64, rows[1] as f64);
    let cortex_points = [
        pt(l.xl(r0), r0),
        pt(l.xr(r0, fd), r0),
        pt(l.xl(r1), r1),
        pt(l.xr(r1, fd), r1),
    ];
    let line =
        |a: Point2, b: Point2| line_from_points(a, b).map_err(|e| PhantomError::InfeasibleGeometry(e.to_string()));
    Ok(PhantomTruth {
        edge_left: pt(l.implant.cx - l.implant.a, l.y_c),
        edge_right: pt(l.implant.cx + l.implant.a, l.y_c),
        cortex_points,
        cortex_rows: rows,
        cortex_left: line(cortex_points[0], cortex_points[2])?,
        cortex_right: line(cortex_points[1], cortex_points[3])?,
        aco_px: l.aco,
        pco_px: l.pco,
        fd_px: fd,
        acor: l.aco / fd,
        pcor: l.pco / fd,
        posterior_side: spec.posterior_side,
        implant: l.implant,
        tibia: l.tibia,
        spec: spec.clone(),
    })
}

/// Renders the phantom; pixel (x, y) is classified by its center.
pub fn generate(spec: &PhantomSpec) -> Result<(RasterImage, PhantomTruth), PhantomError> {
    let t = truth(spec)?;
    let l = layout(spec)?;
    let iv = spec.intensities;
    let fd = spec.fd_px;
    let band_end = l.y_c;
    let cortex_h = (CORTEX_WIDTH * spec.scale().0).max(2.0) / l.cos;
    let base = |x: usize, y: usize| -> u8 {
        let (xf, yf) = (x as f64, y as f64);
        if l.implant.contains(xf, yf) || l.tibia.contains(xf, yf) {
            return iv.implant;
        }
        if yf <= band_end {
            let (xl, xr) = (l.xl(yf), l.xr(yf, fd));
            if xf >= xl && xf <= xr {
                return if xf < xl + cortex_h || xf > xr - cortex_h {
                    iv.cortex
                } else {
                    iv.bone
                };
            }
        }
        iv.background
    };
    let img = if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
        RasterImage::from_fn_gray(spec.width, spec.height, |x, y| {
            (base(x, y) as f64 + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
        })
    } else {
        RasterImage::from_fn_gray(spec.width, spec.height, base)
    };
    let img = img.map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
    Ok((img, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Grid over (pcor, acor) with per-cell jitter; diameter, tilt and the
/// posterior side are drawn per phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub pcor: Range,
    pub acor: Range,
    pub pcor_steps: usize,
    pub acor_steps: usize,
    pub fd_px: Range,
    pub tilt_deg: Range,
    pub noise_sigma: f64,
    pub jitter: bool,
    pub seed: u64,
    pub base: PhantomSpec,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            pcor: Range::new(0.508, 1.576),
            acor: Range::new(0.0, 0.522),
            pcor_steps: 20,
            acor_steps: 10,
            fd_px: Range::new(90.0, 120.0),
            tilt_deg: Range::new(-2.0, 2.0),
            noise_sigma: 8.0,
            jitter: true,
            seed: 0,
            base: PhantomSpec::default(),
        }
    }
}

fn cell(r: &Range, i: usize, n: usize, u: f64) -> f64 {
    if n == 1 && !(r.hi > r.lo) {
        return r.lo;
    }
    r.lo + (i as f64 + u) / n as f64 * (r.hi - r.lo)
}

pub fn sweep_specs(s: &SweepSpec) -> Result<Vec<PhantomSpec>, PhantomError> {
    if s.pcor_steps == 0 || s.acor_steps == 0 {
        return Err(PhantomError::InvalidSpec("grid steps must be positive".into()));
    }
    for r in [&s.pcor, &s.acor, &s.fd_px, &s.tilt_deg] {
        if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
            return Err(PhantomError::InvalidSpec(format!("bad range {}..{}", r.lo, r.hi)));
        }
    }
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = Vec::with_capacity(s.pcor_steps * s.acor_steps);
    for i in 0..s.pcor_steps {
        for j in 0..s.acor_steps {
            let (u, v) = if s.jitter {
                (rng.random::<f64>(), rng.random::<f64>())
            } else {
                (0.5, 0.5)
            };
            let fd = s.fd_px.lo + rng.random::<f64>() * (s.fd_px.hi - s.fd_px.lo);
            let tilt = s.tilt_deg.lo + rng.random::<f64>() * (s.tilt_deg.hi - s.tilt_deg.lo);
            let side = if rng.random_bool(0.5) {
                PosteriorSide::ImageLeft
            } else {
                PosteriorSide::ImageRight
            };
            let seed = rng.random::<u64>();
            out.push(PhantomSpec {
                fd_px: fd,
                pcor: cell(&s.pcor, i, s.pcor_steps, u),
                acor: cell(&s.acor, j, s.acor_steps, v),
                shaft_tilt_deg: tilt,
                posterior_side: side,
                noise_sigma: s.noise_sigma,
                seed,
                ..s.base.clone()
            });
        }
    }
    Ok(out)
}

pub type Rendered = (RasterImage, PhantomTruth);

pub fn sweep(s: &SweepSpec) -> Result<Vec<Result<Rendered, PhantomError>>, PhantomError> {
    Ok(sweep_specs(s)?.iter().map(generate).collect())
}
