//! Coordinate spaces built from lines and circles, their points, and the
//! tolerance policy shared by every numerical check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coordinate of a product space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoordKind {
    /// The real line. Bounds are advisory: they drive samplers and the
    /// out-of-box report of flows, nothing clamps to them.
    Line {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    /// `R / period Z`.
    Circle { period: f64 },
}

impl CoordKind {
    pub const fn line() -> Self {
        CoordKind::Line { lo: None, hi: None }
    }

    pub const fn bounded(lo: f64, hi: f64) -> Self {
        CoordKind::Line {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub const fn circle(period: f64) -> Self {
        CoordKind::Circle { period }
    }

    fn reduce(&self, v: f64) -> f64 {
        match *self {
            CoordKind::Line { .. } => v,
            CoordKind::Circle { period } => {
                let r = v.rem_euclid(period);
                // rem_euclid can round up to exactly `period` for tiny negative v
                if r >= period {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    fn gap(&self, a: f64, b: f64) -> f64 {
        match *self {
            CoordKind::Line { .. } => (a - b).abs(),
            CoordKind::Circle { period } => {
                let d = (a - b).rem_euclid(period);
                d.min(period - d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct Space {
    coords: Vec<CoordKind>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    coords: Vec<CoordKind>,
}

impl TryFrom<RawSpace> for Space {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        Space::new(raw.coords)
    }
}

impl From<Space> for RawSpace {
    fn from(s: Space) -> Self {
        RawSpace { coords: s.coords }
    }
}

impl Space {
    pub fn new(coords: Vec<CoordKind>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidSpace(
                "a space needs at least one coordinate".into(),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            match *c {
                CoordKind::Circle { period } if !(period.is_finite() && period > 0.0) => {
                    return Err(Error::InvalidSpace(format!(
                        "coordinate {i}: circle period must be positive, got {period}"
                    )));
                }
                CoordKind::Line {
                    lo: Some(lo),
                    hi: Some(hi),
                } if lo.is_nan() || hi.is_nan() || lo >= hi => {
                    return Err(Error::InvalidSpace(format!(
                        "coordinate {i}: box needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
                CoordKind::Line { lo, hi } if lo.is_some() != hi.is_some() => {
                    return Err(Error::InvalidSpace(format!(
                        "coordinate {i}: give both box bounds or neither"
                    )));
                }
                _ => {}
            }
        }
        Ok(Space { coords })
    }

    pub fn line(dim: usize) -> Self {
        Space {
            coords: vec![CoordKind::line(); dim.max(1)],
        }
    }

    pub fn circle(period: f64) -> Result<Self> {
        Space::new(vec![CoordKind::circle(period)])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CoordKind] {
        &self.coords
    }

    /// Appends a coordinate, giving the product space `self × c`.
    pub fn extended(&self, c: CoordKind) -> Space {
        let mut coords = self.coords.clone();
        coords.push(c);
        Space { coords }
    }

    /// Reduces circle coordinates into `[0, period)`; line coordinates pass
    /// through unchanged.
    pub fn canonicalize(&self, raw: &[f64]) -> Result<Point> {
        self.check_dim(raw.len())?;
        let mut values = Vec::with_capacity(raw.len());
        for (i, (&v, c)) in raw.iter().zip(&self.coords).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { coord: i, value: v });
            }
            values.push(c.reduce(v));
        }
        Ok(Point(values))
    }

    /// Euclidean product distance; circle coordinates contribute the shorter arc.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_dim(p.dim())?;
        self.check_dim(q.dim())?;
        let sq: f64 = self
            .coords
            .iter()
            .zip(p.0.iter().zip(&q.0))
            .map(|(c, (&a, &b))| {
                let g = c.gap(a, b);
                g * g
            })
            .sum();
        Ok(sq.sqrt())
    }

    pub fn approx_eq(&self, p: &Point, q: &Point, tol: f64) -> Result<bool> {
        Ok(self.distance(p, q)? <= tol)
    }

    /// First coordinate whose value lies outside its box, if any.
    pub fn box_violation(&self, p: &Point) -> Option<(usize, f64, f64, f64)> {
        self.coords
            .iter()
            .zip(&p.0)
            .enumerate()
            .find_map(|(i, (c, &v))| match *c {
                CoordKind::Line {
                    lo: Some(lo),
                    hi: Some(hi),
                } if v < lo || v > hi => Some((i, v, lo, hi)),
                _ => None,
            })
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// A state vector. Points produced by this crate are canonical for the
/// space that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Point(values.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Numerical policy for every comparison in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Point-equality distance, also the band that counts as "on the section".
    pub tol_space: f64,
    /// Width at which crossing-time bisection stops.
    pub tol_time: f64,
    /// Pass bound for law residuals.
    pub tol_law: f64,
    /// Minimum admissible return time.
    pub t_min: f64,
    /// Longest time searched for a crossing.
    pub max_horizon: f64,
    /// March step of crossing detection.
    pub dt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_space: 1e-8,
            tol_time: 1e-10,
            tol_law: 1e-6,
            t_min: 1e-4,
            max_horizon: 1e3,
            dt: 1e-2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tol_space", self.tol_space),
            ("tol_time", self.tol_time),
            ("tol_law", self.tol_law),
            ("t_min", self.t_min),
            ("max_horizon", self.max_horizon),
            ("dt", self.dt),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.t_min <= self.tol_time {
            return Err(Error::InvalidTolerances(
                "t_min must exceed tol_time".into(),
            ));
        }
        if self.dt >= self.max_horizon {
            return Err(Error::InvalidTolerances(
                "dt must be below max_horizon".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle1() -> Space {
        Space::circle(1.0).unwrap()
    }

    #[test]
    fn canonicalize_reduces_circle_coordinates() {
        assert_eq!(
            circle1().canonicalize(&[1.25]).unwrap(),
            Point::new(vec![0.25])
        );
        assert_eq!(
            Space::line(1).canonicalize(&[3.5]).unwrap(),
            Point::new(vec![3.5])
        );
        let c = Space::circle(2.0 * PI).unwrap();
        let p = c.canonicalize(&[-0.5]).unwrap();
        assert!((p[0] - (2.0 * PI - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn canonicalize_rejects_bad_input() {
        assert!(matches!(
            circle1().canonicalize(&[0.1, 0.2]),
            Err(Error::Dimension {
                expected: 1,
                got: 2
            })
        ));
        assert!(matches!(
            circle1().canonicalize(&[f64::NAN]),
            Err(Error::NonFinite { coord: 0, .. })
        ));
        assert!(Space::line(1).canonicalize(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn tiny_negative_circle_value_lands_in_range() {
        let p = circle1().canonicalize(&[-1e-18]).unwrap();
        assert!(p[0] >= 0.0 && p[0] < 1.0);
    }

    #[test]
    fn distance_examples() {
        let c = circle1();
        let d = c
            .distance(&Point::new(vec![0.9]), &Point::new(vec![0.1]))
            .unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        let plane = Space::line(2);
        let d = plane
            .distance(&Point::new(vec![0.0, 0.0]), &Point::new(vec![3.0, 4.0]))
            .unwrap();
        assert_eq!(d, 5.0);
        let p = Point::new(vec![0.3, -2.0]);
        assert_eq!(plane.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn approx_eq_examples() {
        let c = circle1();
        let p = Point::new(vec![0.999999999]);
        let q = Point::new(vec![0.0]);
        assert!(c.approx_eq(&p, &q, 1e-8).unwrap());
        let plane = Space::line(2);
        assert!(!plane
            .approx_eq(
                &Point::new(vec![0.0, 0.0]),
                &Point::new(vec![1.0, 0.0]),
                1e-8
            )
            .unwrap());
        assert!(plane.approx_eq(&q.clone(), &q, 1e-8).is_err());
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(Space::new(vec![]).is_err());
        assert!(Space::new(vec![CoordKind::circle(0.0)]).is_err());
        assert!(Space::new(vec![CoordKind::bounded(2.0, 1.0)]).is_err());
        assert!(Space::new(vec![CoordKind::Line {
            lo: Some(0.0),
            hi: None
        }])
        .is_err());
    }

    #[test]
    fn tolerance_defaults_are_valid() {
        Tolerances::default().validate().unwrap();
        let bad = Tolerances {
            t_min: 1e-12,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
        let bad = Tolerances {
            dt: 2e3,
            ..Tolerances::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn space_serializes_with_tagged_coords() {
        let s = Space::new(vec![CoordKind::circle(1.0), CoordKind::bounded(1.0, 2.0)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"coords":[{"kind":"circle","period":1.0},{"kind":"line","lo":1.0,"hi":2.0}]}"#
        );
        let back: Space = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(
            serde_json::from_str::<Space>(r#"{"coords":[{"kind":"circle","period":-1}]}"#).is_err()
        );
    }

    fn mixed() -> Space {
        Space::new(vec![
            CoordKind::circle(1.0),
            CoordKind::line(),
            CoordKind::circle(2.5),
        ])
        .unwrap()
    }

    fn raw3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 3)
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in raw3(), b in raw3(), c in raw3()) {
            let s = mixed();
            let (p, q, r) = (s.canonicalize(&a).unwrap(), s.canonicalize(&b).unwrap(), s.canonicalize(&c).unwrap());
            let pq = s.distance(&p, &q).unwrap();
            prop_assert!(pq >= 0.0);
            prop_assert!((pq - s.distance(&q, &p).unwrap()).abs() < 1e-12);
            prop_assert!(pq <= s.distance(&p, &r).unwrap() + s.distance(&r, &q).unwrap() + 1e-12);
            prop_assert_eq!(s.distance(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn canonicalize_is_idempotent(a in raw3()) {
            let s = mixed();
            let p = s.canonicalize(&a).unwrap();
            prop_assert_eq!(s.canonicalize(&p.0).unwrap(), p);
        }

        #[test]
        fn distance_ignores_whole_turns(a in raw3(), b in raw3(), k in -5i32..5, j in -5i32..5) {
            let s = mixed();
            let p = s.canonicalize(&a).unwrap();
            let q = s.canonicalize(&b).unwrap();
            let shifted = s.canonicalize(&[a[0] + k as f64, a[1], a[2] + 2.5 * j as f64]).unwrap();
            let d0 = s.distance(&p, &q).unwrap();
            let d1 = s.distance(&shifted, &q).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
