//! Mapping tori and suspension flows.
//!
//! A point `[x, t]` of the mapping torus `X_f` is stored as the canonical
//! pair `(x, t)` with `0 ≤ t < 1`. Crossing height 1 applies `f` to the base,
//! so heights are never wrapped with a plain `mod 1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::category::{MapMorphism, PointMap, TimeReparam, WeakMorphism};
use crate::error::{Error, Result};
use crate::report::{CheckReport, ReportBuilder};
use crate::sampling;
use crate::section::GlobalSectionSystem;
use crate::space::Point;
use crate::systems::{FlowSystem, MapSystem};

/// Sample count of the homeomorphism check run by [`suspend_system`].
const BASE_CHECK_SAMPLES: usize = 16;
const BASE_CHECK_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub base: Point,
    pub height: f64,
}

impl TorusPoint {
    pub fn new(base: Point, height: f64) -> Self {
        TorusPoint { base, height }
    }

    /// `base ++ [height]`, the state layout of suspension flows.
    pub fn to_point(&self) -> Point {
        let mut v = Vec::with_capacity(self.base.dim() + 1);
        v.extend_from_slice(&self.base.0);
        v.push(self.height);
        Point(v)
    }

    pub fn from_point(p: &Point) -> Self {
        let (base, h) = p.0.split_at(p.dim() - 1);
        TorusPoint {
            base: Point(base.to_vec()),
            height: h[0],
        }
    }
}

/// `[x, t] = [fⁿ(x), t − n]` with `n = ⌊t⌋`, i.e. the unique integer with
/// `t − 1 < n ≤ t`.
pub fn torus_canonicalize(m: &MapSystem, x: &Point, t: f64) -> Result<TorusPoint> {
    if !t.is_finite() {
        return Err(Error::NonFinite {
            coord: x.dim(),
            value: t,
        });
    }
    let n = t.floor();
    let mut height = t - n;
    let mut n = n as i64;
    // t - floor(t) can round up to 1 for t just below an integer
    if height >= 1.0 {
        height = 0.0;
        n += 1;
    }
    Ok(TorusPoint {
        base: m.apply(x, n)?,
        height,
    })
}

/// `Σf([x, t], s) := [fⁿ(x), s + t − n]` with `s + t − 1 < n ≤ s + t`.
pub fn suspension_eval(m: &MapSystem, p: &TorusPoint, s: f64) -> Result<TorusPoint> {
    torus_canonicalize(m, &p.base, p.height + s)
}

/// Distance on canonical representatives. When the heights are more than
/// half a turn apart the seam representatives `(f(x), h − 1)` and
/// `(f⁻¹(x), h + 1)` of `p` are compared too, and the minimum is taken.
pub fn torus_distance(m: &MapSystem, p: &TorusPoint, q: &TorusPoint) -> Result<f64> {
    let combine = |d: f64, dh: f64| (d * d + dh * dh).sqrt();
    let dh = p.height - q.height;
    let direct = combine(m.distance(&p.base, &q.base)?, dh);
    if dh.abs() <= 0.5 {
        return Ok(direct);
    }
    let seam = if dh > 0.0 {
        combine(m.distance(&m.forward(&p.base)?, &q.base)?, dh - 1.0)
    } else {
        combine(m.distance(&m.backward(&p.base)?, &q.base)?, dh + 1.0)
    };
    Ok(direct.min(seam))
}

/// Identity and group laws of `Σf` on samples `(p, s₁, s₂)` with `p` given as
/// `base ++ [height]`.
pub fn suspension_law_check(m: &MapSystem, samples: &[(Point, f64, f64)], tol: f64) -> CheckReport {
    let mut report = ReportBuilder::new(format!("suspension laws of {}", m.name()), tol);
    for (i, (p, s1, s2)) in samples.iter().enumerate() {
        let r = (|| {
            let p = TorusPoint::from_point(p);
            let identity = torus_distance(m, &suspension_eval(m, &p, 0.0)?, &p)?;
            let nested = suspension_eval(m, &suspension_eval(m, &p, *s1)?, *s2)?;
            let direct = suspension_eval(m, &p, s1 + s2)?;
            Ok(identity.max(torus_distance(m, &nested, &direct)?))
        })();
        let mut sample = p.0.clone();
        sample.extend([*s1, *s2]);
        report.record(i, &sample, r);
    }
    report.finish()
}

/// `T_Σf([x, 0]) = 1` and `PΣf([x, 0]) = [f(x), 0]` on base points.
pub fn suspension_return_check(m: &MapSystem, samples: &[Point], tol: f64) -> Result<CheckReport> {
    let s = suspend_system(m)?;
    let mut report = ReportBuilder::new(format!("return map of Σ({})", m.name()), tol);
    for (i, x) in samples.iter().enumerate() {
        let r = (|| {
            let (t, p) = s.first_return(&TorusPoint::new(x.clone(), 0.0).to_point())?;
            let expected = TorusPoint::new(m.forward(x)?, 0.0).to_point();
            Ok((t - 1.0).abs().max(s.flow().distance(&p, &expected)?))
        })();
        report.record(i, &x.0, r);
    }
    Ok(report.finish())
}

/// `(Σf, X_f, (X_f)₀)`. Fails when the base map does not pass a sampled
/// homeomorphism check.
pub fn suspend_system(m: &MapSystem) -> Result<GlobalSectionSystem> {
    let samples = sampling::map_points(m, BASE_CHECK_SAMPLES, BASE_CHECK_SEED)?;
    let tol = crate::space::Tolerances::default().tol_law;
    let report = m.inverse_check(&samples, tol);
    if !report.pass {
        return Err(Error::InvalidSystem(format!(
            "{} is not a homeomorphism on samples (max residual {:e})",
            m.name(),
            report.max_residual
        )));
    }
    Ok(GlobalSectionSystem::torus(FlowSystem::suspension(
        m.clone(),
    )))
}

/// `h̄([x, t]) = [h(x), t]` as a flow morphism `Σf → Σg`.
pub fn suspend_morphism(h: &MapMorphism) -> Result<WeakMorphism> {
    let source = Arc::new(suspend_system(h.source())?);
    let target = Arc::new(suspend_system(h.target())?);
    Ok(WeakMorphism::new(
        source,
        target,
        PointMap::Suspended(Arc::new(h.map().clone())),
        TimeReparam::Identity,
    ))
}

/// [`suspend_morphism`] gated on the base morphism law holding on `samples`.
pub fn suspend_morphism_checked(
    h: &MapMorphism,
    samples: &[Point],
    tol: f64,
) -> Result<WeakMorphism> {
    let report: CheckReport = crate::category::map_morphism_check(h, samples, tol);
    report.gate()?;
    suspend_morphism(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_get, System};
    use crate::category::{
        flow_morphism_check, section_preservation_check, section_preservation_samples,
    };
    use crate::expr::parse;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn map(name: &str) -> MapSystem {
        match catalog_get(name, &BTreeMap::new()).unwrap() {
            System::Map(m) => m,
            _ => panic!(),
        }
    }

    fn rot(alpha: f64) -> MapSystem {
        let mut p = BTreeMap::new();
        p.insert("alpha".to_string(), alpha);
        match catalog_get("circle_rotation", &p).unwrap() {
            System::Map(m) => m,
            _ => panic!(),
        }
    }

    fn tp(b: f64, h: f64) -> TorusPoint {
        TorusPoint::new(Point::new(vec![b]), h)
    }

    fn assert_tp(p: &TorusPoint, base: f64, height: f64) {
        assert!(
            (p.base[0] - base).abs() < 1e-12 && (p.height - height).abs() < 1e-12,
            "{p:?} vs [{base}, {height}]"
        );
    }

    #[test]
    fn torus_canonicalize_examples() {
        let m = rot(0.1);
        let x = Point::new(vec![0.3]);
        assert_tp(&torus_canonicalize(&m, &x, 1.0).unwrap(), 0.4, 0.0);
        assert_tp(&torus_canonicalize(&m, &x, 0.3).unwrap(), 0.3, 0.3);
        assert_tp(
            &torus_canonicalize(&m, &Point::new(vec![0.0]), -0.25).unwrap(),
            0.9,
            0.75,
        );
        assert!(torus_canonicalize(&m, &x, f64::NAN).is_err());
    }

    #[test]
    fn height_stays_below_one() {
        let m = rot(0.1);
        let p = torus_canonicalize(&m, &Point::new(vec![0.3]), -1e-17).unwrap();
        assert!(p.height < 1.0 && p.height >= 0.0, "{p:?}");
    }

    #[test]
    fn suspension_eval_examples() {
        let m = rot(0.1);
        assert_tp(
            &suspension_eval(&m, &tp(0.3, 0.25), 0.5).unwrap(),
            0.3,
            0.75,
        );
        assert_tp(&suspension_eval(&m, &tp(0.3, 0.5), 0.7).unwrap(), 0.4, 0.2);
        assert_tp(&suspension_eval(&m, &tp(0.3, 0.3), -0.5).unwrap(), 0.2, 0.8);
    }

    #[test]
    fn full_turn_applies_the_map() {
        let m = rot(0.1);
        let mut rng = sampling::rng(1);
        for _ in 0..50 {
            let p = tp(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let q = suspension_eval(&m, &p, 1.0).unwrap();
            assert!(m.distance(&q.base, &m.forward(&p.base).unwrap()).unwrap() < 1e-12);
            assert!((q.height - p.height).abs() < 1e-12);
        }
    }

    #[test]
    fn seam_distance_uses_both_representatives() {
        let m = rot(0.1);
        // [0.3, 0.999] and [0.4, 0.001] are 0.002 apart across the seam
        let d = torus_distance(&m, &tp(0.3, 0.999), &tp(0.4, 0.001)).unwrap();
        assert!((d - 0.002).abs() < 1e-12, "{d}");
        let d = torus_distance(&m, &tp(0.4, 0.001), &tp(0.3, 0.999)).unwrap();
        assert!((d - 0.002).abs() < 1e-12, "{d}");
        let d = torus_distance(&m, &tp(0.3, 0.2), &tp(0.3, 0.5)).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn suspend_system_of_interval_identity() {
        let s = suspend_system(&map("interval_identity")).unwrap();
        for x in sampling::section_points(&s, 20, 3).unwrap() {
            assert_eq!(s.return_time(&x).unwrap(), 1.0);
            assert_eq!(s.poincare_map(&x).unwrap(), x);
        }
    }

    #[test]
    fn suspension_return_time_is_one() {
        let s = suspend_system(&rot(0.1)).unwrap();
        for x in sampling::section_points(&s, 20, 4).unwrap() {
            assert_eq!(s.return_time(&x).unwrap(), 1.0);
        }
        // off the seam the next crossing is 1 - height away
        let p = tp(0.3, 0.25).to_point();
        assert_eq!(s.crossing_detect(&p, 0.0, 1.0).unwrap()[0].time, 0.75);
    }

    #[test]
    fn suspension_group_law_is_exact() {
        let m = rot(0.1);
        let mut rng = sampling::rng(6);
        for _ in 0..200 {
            let p = tp(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let (s1, s2) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let nested = suspension_eval(&m, &suspension_eval(&m, &p, s1).unwrap(), s2).unwrap();
            let direct = suspension_eval(&m, &p, s1 + s2).unwrap();
            assert!(torus_distance(&m, &nested, &direct).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn non_homeomorphism_is_rejected() {
        let m = MapSystem::from_exprs(
            "doubling",
            crate::space::Space::circle(1.0).unwrap(),
            vec![parse("2*x1").unwrap()],
            vec![parse("x1").unwrap()],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(matches!(suspend_system(&m), Err(Error::InvalidSystem(_))));
    }

    fn shift(by: f64) -> MapMorphism {
        let m = rot(0.1);
        let mut p = BTreeMap::new();
        p.insert("c".to_string(), by);
        MapMorphism::from_exprs(m.clone(), m, vec![parse("x1 + c").unwrap()], p).unwrap()
    }

    #[test]
    fn suspend_morphism_examples() {
        let id = MapMorphism::identity(rot(0.1));
        let bar = suspend_morphism(&id).unwrap();
        let p = tp(0.2, 0.4).to_point();
        assert_eq!(bar.apply(&p).unwrap(), p);

        let bar = suspend_morphism(&shift(0.5)).unwrap();
        let q = TorusPoint::from_point(&bar.apply(&p).unwrap());
        assert_tp(&q, 0.7, 0.4);

        let h1 = shift(0.25);
        let h2 = shift(0.3);
        let composite = suspend_morphism(&h2.compose(&h1).unwrap()).unwrap();
        let chained = suspend_morphism(&h2)
            .unwrap()
            .compose(&suspend_morphism(&h1).unwrap())
            .unwrap();
        let mut rng = sampling::rng(2);
        for _ in 0..20 {
            let p = tp(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)).to_point();
            let a = composite.apply(&p).unwrap();
            let b = chained.apply(&p).unwrap();
            assert!(composite.target().flow().distance(&a, &b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn suspended_morphisms_pass_their_checks() {
        let bar = suspend_morphism(&shift(0.5)).unwrap();
        let src = bar.source().clone();
        let samples = sampling::timed_points(src.flow(), 50, 3.0, 8).unwrap();
        assert!(flow_morphism_check(&bar, &samples, 1e-9).pass);
        let section = sampling::section_points(&src, 20, 8).unwrap();
        let pres = section_preservation_samples(&src, &section).unwrap();
        assert!(section_preservation_check(&bar, &pres).pass);
    }

    #[test]
    fn checked_suspension_rejects_non_morphisms() {
        let m = rot(0.1);
        let doubling = MapMorphism::from_exprs(
            m.clone(),
            m.clone(),
            vec![parse("2*x1").unwrap()],
            BTreeMap::new(),
        )
        .unwrap();
        let samples = sampling::map_points(&m, 20, 1).unwrap();
        assert!(matches!(
            suspend_morphism_checked(&doubling, &samples, 1e-6),
            Err(Error::Precondition(_))
        ));
        assert!(suspend_morphism_checked(&shift(0.5), &samples, 1e-6).is_ok());
    }

    #[test]
    fn torus_point_serializes() {
        let json = serde_json::to_string(&tp(0.25, 0.5)).unwrap();
        assert_eq!(json, r#"{"base":[0.25],"height":0.5}"#);
    }
}
