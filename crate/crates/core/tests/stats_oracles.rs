//! Agreement statistics against frozen reference values and exact rational
//! arithmetic.

use cor_core::stats::{
    agreement_report, bland_altman, mean_sd, pearson, shapiro_wilk, spearman, CorrelationMethod, PairedSeries, Series,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

// Reference W and p from an independent Shapiro-Wilk implementation
// (scipy.stats.shapiro, which wraps the same algorithm in Fortran).
#[derive(serde::Deserialize)]
struct SwCase {
    name: String,
    data: Vec<f64>,
    w: f64,
    p: f64,
}

#[derive(serde::Deserialize)]
struct SwFile {
    cases: Vec<SwCase>,
}

fn sw_cases() -> Vec<SwCase> {
    let text = include_str!("data/shapiro_wilk.json");
    serde_json::from_str::<SwFile>(text).unwrap().cases
}

#[test]
fn shapiro_wilk_matches_reference() {
    for c in sw_cases() {
        let (w, p) = shapiro_wilk(&c.data).unwrap();
        assert!((w - c.w).abs() <= 1e-3, "{}: W {w} vs {}", c.name, c.w);
        assert!((p - c.p).abs() <= 1e-3, "{}: p {p} vs {}", c.name, c.p);
        // The implementation tracks the reference far tighter than required.
        assert!((w - c.w).abs() <= 1e-6, "{}: W {w} vs {}", c.name, c.w);
    }
}

#[test]
fn shapiro_wilk_order_invariant() {
    let c = &sw_cases()[4];
    let mut rev = c.data.clone();
    rev.reverse();
    assert_eq!(shapiro_wilk(&c.data).unwrap(), shapiro_wilk(&rev).unwrap());
}

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn rat_mean(v: &[f64]) -> BigRational {
    let s = v.iter().fold(BigRational::zero(), |acc, x| acc + rat(*x));
    s / BigRational::from_integer(BigInt::from(v.len()))
}

fn rat_ss(v: &[f64], m: &BigRational) -> BigRational {
    v.iter().fold(BigRational::zero(), |acc, x| {
        let d = rat(*x) - m;
        acc + &d * &d
    })
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

const X: [f64; 10] = [0.95, 1.10, 0.88, 1.30, 1.02, 0.97, 1.21, 0.84, 1.15, 1.05];
const Y: [f64; 10] = [0.93, 1.14, 0.90, 1.22, 1.00, 1.01, 1.18, 0.89, 1.09, 1.11];

#[test]
fn mean_sd_exact_oracle() {
    let m = rat_mean(&X);
    let var = rat_ss(&X, &m) / BigRational::from_integer(BigInt::from(X.len() - 1));
    let (mean, sd) = mean_sd(&X).unwrap();
    assert!((mean - to_f64(&m)).abs() < 1e-14);
    assert!((sd - to_f64(&var).sqrt()).abs() < 1e-14);
}

#[test]
fn pearson_exact_oracle() {
    let (mx, my) = (rat_mean(&X), rat_mean(&Y));
    let sxy = X.iter().zip(&Y).fold(BigRational::zero(), |acc, (a, b)| {
        acc + (rat(*a) - &mx) * (rat(*b) - &my)
    });
    let r2 = &sxy * &sxy / (rat_ss(&X, &mx) * rat_ss(&Y, &my));
    let want = to_f64(&r2).sqrt() * if sxy > BigRational::zero() { 1.0 } else { -1.0 };
    let got = pearson(&X, &Y).unwrap();
    assert!((got.coefficient - want).abs() < 1e-13);
    // Reference p-value (scipy.stats.pearsonr).
    assert!((got.coefficient - 0.952815447311657).abs() < 1e-12);
    assert!((got.p_value - 2.0481989288883166e-05).abs() < 1e-9);
}

#[test]
fn spearman_reference() {
    let s = spearman(&X, &Y).unwrap();
    assert!((s.coefficient - 0.9515151515151514).abs() < 1e-12);
    assert!((s.p_value - 2.279854920641689e-05).abs() < 1e-9);
    let y_ties = [0.93, 1.14, 0.90, 1.14, 1.00, 1.01, 1.18, 0.89, 1.00, 1.11];
    let s = spearman(&X, &y_ties).unwrap();
    assert!((s.coefficient - 0.859772080979937).abs() < 1e-12);
    assert!((s.p_value - 0.0014233071637547578).abs() < 1e-9);
}

#[test]
fn bland_altman_exact_oracle() {
    let diffs: Vec<f64> = X.iter().zip(&Y).map(|(a, b)| a - b).collect();
    let m = rat_mean(&diffs);
    let sd = (to_f64(&rat_ss(&diffs, &m)) / (diffs.len() - 1) as f64).sqrt();
    let ba = bland_altman(&X, &Y).unwrap();
    assert!((ba.mean_diff - to_f64(&m)).abs() < 1e-15);
    assert!((ba.sd_diff - sd).abs() < 1e-14);
    assert!((ba.loa_high - (to_f64(&m) + 1.96 * sd)).abs() < 1e-14);
    assert!((ba.loa_low - (to_f64(&m) - 1.96 * sd)).abs() < 1e-14);
    assert_eq!(ba.points.len(), X.len());
}

#[test]
fn report_picks_method_by_normality() {
    let normal = PairedSeries::new(
        Series::new("model", X.to_vec()).unwrap(),
        Series::new("truth", Y.to_vec()).unwrap(),
    )
    .unwrap();
    let r = agreement_report(&normal, 0.05).unwrap();
    assert!(r.model.normal && r.truth.normal);
    assert_eq!(r.correlation.method, CorrelationMethod::Pearson);

    let skewed = sw_cases()[5].data.clone();
    let shifted: Vec<f64> = skewed.iter().map(|v| v * 1.01 + 0.001).collect();
    let p = PairedSeries::new(
        Series::new("model", shifted).unwrap(),
        Series::new("truth", skewed).unwrap(),
    )
    .unwrap();
    let r = agreement_report(&p, 0.05).unwrap();
    assert!(!r.truth.normal);
    assert_eq!(r.correlation.method, CorrelationMethod::Spearman);
    assert_eq!(r.correlation.coefficient, 1.0);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["correlation"]["method"], "Spearman");
}
