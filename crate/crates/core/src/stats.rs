//! Agreement statistics between model output and ground truth: descriptive
//! statistics, Shapiro-Wilk normality (Royston's AS R94), Pearson and
//! Spearman correlation, Bland-Altman limits of agreement and histograms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least {required} observations, got {actual}")]
    TooFewObservations { required: usize, actual: usize },
    #[error("Shapiro-Wilk needs 3 <= n <= 5000, got {0}")]
    NOutOfRange(usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("paired series differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::TooFewObservations { required: 1, actual: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    pub model: Series,
    pub truth: Series,
}

impl PairedSeries {
    pub fn new(model: Series, truth: Series) -> Result<Self, StatsError> {
        if model.values.len() != truth.values.len() {
            return Err(StatsError::LengthMismatch(model.values.len(), truth.values.len()));
        }
        Ok(Self { model, truth })
    }

    pub fn len(&self) -> usize {
        self.model.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.values.is_empty()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_sd(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewObservations {
            required: 2,
            actual: values.len(),
        });
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((m, (ss / (values.len() - 1) as f64).sqrt()))
}

fn poly(cc: &[f64], x: f64) -> f64 {
    let mut ret = cc[0];
    if cc.len() > 1 {
        let mut p = x * cc[cc.len() - 1];
        for j in (1..cc.len() - 1).rev() {
            p = (p + cc[j]) * x;
        }
        ret += p;
    }
    ret
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Shapiro-Wilk W and its p-value by Royston's approximation (AS R94),
/// valid for 3 <= n <= 5000.
pub fn shapiro_wilk(values: &[f64]) -> Result<(f64, f64), StatsError> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = values.len();
    if !(3..=5000).contains(&n) {
        return Err(StatsError::NOutOfRange(n));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }

    // Half-vector of coefficients for the upper order statistics.
    let nn2 = n / 2;
    let an = n as f64;
    let mut a = vec![0.0; nn2];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let norm = std_normal();
        let m: Vec<f64> = (1..=nn2)
            .map(|i| -norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        let (first_scaled, fac) = if n > 5 {
            let a2 = m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first_scaled..nn2 {
            a[i] = m[i] / fac;
        }
    }

    // W as the squared correlation between the scaled order statistics
    // and the antisymmetric coefficient vector.
    let coef: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            if i < j {
                -a[i]
            } else if i > j {
                a[j]
            } else {
                0.0
            }
        })
        .collect();
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let (ca, xa) = (mean(&coef), mean(&xs));
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (c, v) in coef.iter().zip(&xs) {
        let (dc, dx) = (c - ca, v - xa);
        ssa += dc * dc;
        ssx += dx * dx;
        sax += dc * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        let p = (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0);
        return Ok((w, p));
    }
    let mut y = w1.ln();
    let xx = an.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return Ok((w, 1e-99));
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    let p = std_normal().sf((y - m) / s);
    Ok((w, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub p_value: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewObservations {
            required: 3,
            actual: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn product_moment(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-tailed p-value of a correlation coefficient via the t statistic
/// with n - 2 degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check_pair(x, y)?;
    let r = product_moment(x, y)?;
    Ok(Correlation {
        method: CorrelationMethod::Pearson,
        coefficient: r,
        p_value: correlation_p_value(r, x.len()),
    })
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check_pair(x, y)?;
    let r = product_moment(&midranks(x), &midranks(y))?;
    Ok(Correlation {
        method: CorrelationMethod::Spearman,
        coefficient: r,
        p_value: correlation_p_value(r, x.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    /// (pair mean, model - truth) per observation.
    pub points: Vec<(f64, f64)>,
}

pub fn bland_altman(model: &[f64], truth: &[f64]) -> Result<BlandAltman, StatsError> {
    if model.len() != truth.len() {
        return Err(StatsError::LengthMismatch(model.len(), truth.len()));
    }
    let diffs: Vec<f64> = model.iter().zip(truth).map(|(m, t)| m - t).collect();
    let (mean_diff, sd_diff) = mean_sd(&diffs)?;
    let points = model.iter().zip(truth).map(|(m, t)| ((m + t) / 2.0, m - t)).collect();
    Ok(BlandAltman {
        mean_diff,
        sd_diff,
        loa_low: mean_diff - 1.96 * sd_diff,
        loa_high: mean_diff + 1.96 * sd_diff,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn sturges_bins(n: usize) -> usize {
    (n.max(1) as f64).log2().ceil() as usize + 1
}

pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<Histogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::TooFewObservations { required: 1, actual: 0 });
    }
    let bins = bins.unwrap_or_else(|| sturges_bins(values.len()));
    if bins == 0 {
        return Err(StatsError::InvalidParam("bin count must be positive".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0; bins];
    for v in values {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub label: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub w: f64,
    pub p_sw: f64,
    pub normal: bool,
}

pub fn summarize(s: &Series, alpha: f64) -> Result<SeriesSummary, StatsError> {
    let (mean, sd) = mean_sd(&s.values)?;
    let (w, p_sw) = shapiro_wilk(&s.values)?;
    Ok(SeriesSummary {
        label: s.label.clone(),
        n: s.values.len(),
        min: s.values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean,
        sd,
        w,
        p_sw,
        normal: p_sw > alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub alpha: f64,
    pub model: SeriesSummary,
    pub truth: SeriesSummary,
    pub correlation: Correlation,
    pub bland_altman: BlandAltman,
    pub histogram_model: Histogram,
    pub histogram_truth: Histogram,
    pub histogram_diff: Histogram,
}

/// Normality first, then Pearson when both series pass Shapiro-Wilk at
/// `alpha`, Spearman otherwise.
pub fn agreement_report(p: &PairedSeries, alpha: f64) -> Result<AgreementReport, StatsError> {
    if p.len() < 3 {
        return Err(StatsError::TooFewObservations {
            required: 3,
            actual: p.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidParam(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let model = summarize(&p.model, alpha)?;
    let truth = summarize(&p.truth, alpha)?;
    let (x, y) = (&p.model.values, &p.truth.values);
    let correlation = if model.normal && truth.normal {
        pearson(x, y)?
    } else {
        spearman(x, y)?
    };
    let ba = bland_altman(x, y)?;
    let diffs: Vec<f64> = ba.points.iter().map(|&(_, d)| d).collect();
    Ok(AgreementReport {
        alpha,
        model,
        truth,
        correlation,
        histogram_model: histogram(x, None)?,
        histogram_truth: histogram(y, None)?,
        histogram_diff: histogram(&diffs, None)?,
        bland_altman: ba,
    })
}
