//! Planar geometry in image coordinates: `x` is the column, `y` the row,
//! origin at the top-left pixel center.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cannot build a line from coincident points ({x}, {y})")]
    CoincidentPoints { x: f64, y: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Checked constructor rejecting NaN and infinities.
    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Infinite line through two distinct points, directed from `p1` to `p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Line2 {
    p1: Point2,
    p2: Point2,
}

impl Line2 {
    pub fn p1(&self) -> Point2 {
        self.p1
    }

    pub fn p2(&self) -> Point2 {
        self.p2
    }

    /// Column of the line at row `y`. `None` for horizontal lines.
    pub fn x_at(&self, y: f64) -> Option<f64> {
        let dy = self.p2.y - self.p1.y;
        if dy == 0.0 {
            return None;
        }
        let t = (y - self.p1.y) / dy;
        Some(self.p1.x + t * (self.p2.x - self.p1.x))
    }
}

impl<'de> Deserialize<'de> for Line2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p1: Point2,
            p2: Point2,
        }
        let raw = Raw::deserialize(d)?;
        line_from_points(raw.p1, raw.p2).map_err(serde::de::Error::custom)
    }
}

pub fn line_from_points(a: Point2, b: Point2) -> Result<Line2, GeometryError> {
    if !(a.x.is_finite() && a.y.is_finite() && b.x.is_finite() && b.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if a == b {
        return Err(GeometryError::CoincidentPoints { x: a.x, y: a.y });
    }
    Ok(Line2 { p1: a, p2: b })
}

/// Perpendicular distance from `p` to the line through `l.p1` and `l.p2`:
///
/// `|(x2 - x1)(y1 - y0) - (x1 - x0)(y2 - y1)| / sqrt((x2 - x1)^2 + (y2 - y1)^2)`
pub fn point_line_distance(p: Point2, l: &Line2) -> f64 {
    let (x0, y0) = (p.x, p.y);
    // Endpoints in lexicographic order so swapping them is bit-exact.
    let (a, b) = if (l.p1.x, l.p1.y) <= (l.p2.x, l.p2.y) {
        (l.p1, l.p2)
    } else {
        (l.p2, l.p1)
    };
    let (x1, y1) = (a.x, a.y);
    let (x2, y2) = (b.x, b.y);
    let num = ((x2 - x1) * (y1 - y0) - (x1 - x0) * (y2 - y1)).abs();
    let den = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
    num / den
}

pub fn euclidean_distance(a: Point2, b: Point2) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(a: (f64, f64), b: (f64, f64)) -> Line2 {
        line_from_points(Point2::new(a.0, a.1), Point2::new(b.0, b.1)).unwrap()
    }

    /// Parametric projection onto the line, then a plain Euclidean distance.
    fn projection_oracle(p: Point2, l: &Line2) -> f64 {
        let (dx, dy) = (l.p2.x - l.p1.x, l.p2.y - l.p1.y);
        let t = ((p.x - l.p1.x) * dx + (p.y - l.p1.y) * dy) / (dx * dx + dy * dy);
        let foot = Point2::new(l.p1.x + t * dx, l.p1.y + t * dy);
        ((p.x - foot.x).powi(2) + (p.y - foot.y).powi(2)).sqrt()
    }

    #[test]
    fn axis_aligned_lines() {
        let h = line((0.0, 0.0), (10.0, 0.0));
        assert_eq!(h.x_at(3.0), None);
        let v = line((3.0, 3.0), (3.0, 9.0));
        assert_eq!(v.x_at(100.0), Some(3.0));
        assert_eq!(v.p1(), Point2::new(3.0, 3.0));
        assert_eq!(v.p2(), Point2::new(3.0, 9.0));
    }

    #[test]
    fn coincident_points_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert_eq!(
            line_from_points(p, p),
            Err(GeometryError::CoincidentPoints { x: 1.0, y: 1.0 })
        );
        assert_eq!(
            line_from_points(p, Point2::new(f64::NAN, 0.0)),
            Err(GeometryError::NonFinite)
        );
        assert!(Point2::try_new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let h = line((0.0, 0.0), (10.0, 0.0));
        assert_eq!(point_line_distance(Point2::new(3.0, 5.0), &h), 5.0);
        assert_eq!(point_line_distance(Point2::new(7.0, 0.0), &h), 0.0);
        let diag = line((0.0, 0.0), (1.0, 1.0));
        let d = point_line_distance(Point2::new(1.0, 0.0), &diag);
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_projection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut pt = || Point2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
            let (a, b, p) = (pt(), pt(), pt());
            let l = line_from_points(a, b).unwrap();
            let got = point_line_distance(p, &l);
            let want = projection_oracle(p, &l);
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)), 5.0);
        let a = Point2::new(2.5, -1.0);
        assert_eq!(euclidean_distance(a, a), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = Point2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
            let b = Point2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
            let (dx, dy) = (a.x - b.x, a.y - b.y);
            assert!((euclidean_distance(a, b) - (dx * dx + dy * dy).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn line_json_rejects_coincident_points() {
        let bad = r#"{"p1":{"x":1.0,"y":2.0},"p2":{"x":1.0,"y":2.0}}"#;
        assert!(serde_json::from_str::<Line2>(bad).is_err());
        let good = r#"{"p1":{"x":1.0,"y":2.0},"p2":{"x":1.0,"y":3.0}}"#;
        assert_eq!(
            serde_json::from_str::<Line2>(good).unwrap(),
            line((1.0, 2.0), (1.0, 3.0))
        );
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1000.0f64..1000.0
    }

    fn distinct_pair() -> impl Strategy<Value = (Point2, Point2)> {
        (coord(), coord(), coord(), coord())
            .prop_filter("distinct", |(a, b, c, d)| (a - c).abs() + (b - d).abs() > 1e-3)
            .prop_map(|(a, b, c, d)| (Point2::new(a, b), Point2::new(c, d)))
    }

    proptest! {
        #[test]
        fn swap_endpoints_invariant((a, b) in distinct_pair(), px in coord(), py in coord()) {
            let p = Point2::new(px, py);
            let l1 = line_from_points(a, b).unwrap();
            let l2 = line_from_points(b, a).unwrap();
            prop_assert_eq!(point_line_distance(p, &l1), point_line_distance(p, &l2));
        }

        #[test]
        fn rigid_motion_invariant(
            (a, b) in distinct_pair(), px in coord(), py in coord(),
            theta in -3.2f64..3.2, tx in coord(), ty in coord(),
        ) {
            let (s, c) = theta.sin_cos();
            let m = |q: Point2| Point2::new(c * q.x - s * q.y + tx, s * q.x + c * q.y + ty);
            let p = Point2::new(px, py);
            let d0 = point_line_distance(p, &line_from_points(a, b).unwrap());
            let d1 = point_line_distance(m(p), &line_from_points(m(a), m(b)).unwrap());
            prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0), "{} vs {}", d0, d1);
        }

        #[test]
        fn uniform_scaling_is_linear((a, b) in distinct_pair(), px in coord(), py in coord(), k in 0.01f64..50.0) {
            let sc = |q: Point2| Point2::new(k * q.x, k * q.y);
            let p = Point2::new(px, py);
            let d0 = point_line_distance(p, &line_from_points(a, b).unwrap());
            let d1 = point_line_distance(sc(p), &line_from_points(sc(a), sc(b)).unwrap());
            prop_assert!((k * d0 - d1).abs() < 1e-9 * (1.0 + d1));
        }

        #[test]
        fn zero_iff_collinear(x1 in -50i32..50, y1 in -50i32..50, x2 in -50i32..50, y2 in -50i32..50, x0 in -50i32..50, y0 in -50i32..50) {
            prop_assume!((x1, y1) != (x2, y2));
            let l = line_from_points(Point2::new(x1 as f64, y1 as f64), Point2::new(x2 as f64, y2 as f64)).unwrap();
            let d = point_line_distance(Point2::new(x0 as f64, y0 as f64), &l);
            let cross = (x2 - x1) as i64 * (y0 - y1) as i64 - (y2 - y1) as i64 * (x0 - x1) as i64;
            prop_assert_eq!(d == 0.0, cross == 0);
        }
    }
}
