//! The unit `l` and counit `(k, τ)` of the adjunction `Σ ⊣ P`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::section::GlobalSectionSystem;
use crate::space::Point;
use crate::suspension::{suspend_system, TorusPoint};
use crate::systems::MapSystem;

use super::morphism::{MapMorphism, PointMap, TimeReparam, WeakMorphism};

/// Upper bound on the number of return-time cells walked for one integral.
const MAX_CELLS: usize = 1_000_000;

/// Return times along the section orbit of one point, computed on demand.
/// `forward[i] = T(Pⁱx)` and `backward[i - 1] = T(P⁻ⁱx)`.
pub(crate) struct OrbitCells<'a> {
    sys: &'a GlobalSectionSystem,
    reversed: Option<GlobalSectionSystem>,
    forward: Vec<f64>,
    ahead: Point,
    backward: Vec<f64>,
    behind: Point,
}

impl<'a> OrbitCells<'a> {
    pub fn new(sys: &'a GlobalSectionSystem, x: &Point) -> Result<Self> {
        let x = sys.flow().canonicalize(&x.0)?;
        if !sys.on_section(&x)? {
            return Err(Error::NotOnSection(x.0));
        }
        Ok(OrbitCells {
            sys,
            reversed: None,
            forward: Vec::new(),
            ahead: x.clone(),
            backward: Vec::new(),
            behind: x,
        })
    }

    fn guard(len: usize) -> Result<()> {
        if len >= MAX_CELLS {
            return Err(Error::InvalidSystem(format!(
                "return-time integral needs more than {MAX_CELLS} section cells"
            )));
        }
        Ok(())
    }

    /// `T(Pⁱx)`.
    pub fn forward_time(&mut self, i: usize) -> Result<f64> {
        while self.forward.len() <= i {
            Self::guard(self.forward.len())?;
            let (t, next) = self.sys.first_return(&self.ahead)?;
            self.forward.push(t);
            self.ahead = next;
        }
        Ok(self.forward[i])
    }

    /// `T(P⁻ⁱx)` for `i ≥ 1`, which is the backward return time of `P^{-(i-1)}x`.
    pub fn backward_time(&mut self, i: usize) -> Result<f64> {
        debug_assert!(i >= 1);
        while self.backward.len() < i {
            Self::guard(self.backward.len())?;
            let rev = self.reversed.get_or_insert_with(|| self.sys.reversed());
            let (t, prev) = rev.first_return(&self.behind)?;
            self.backward.push(t);
            self.behind = prev;
        }
        Ok(self.backward[i - 1])
    }

    /// `∫₀ᵃ R(u) du` where `R` is the step function equal to `T(Pⁱx)` on `[i, i + 1)`.
    pub fn integral(&mut self, a: f64) -> Result<f64> {
        if !a.is_finite() {
            return Err(Error::NonFinite { coord: 0, value: a });
        }
        let m = a.floor();
        if a >= 0.0 {
            let whole = m as usize;
            let mut sum = 0.0;
            for i in 0..whole {
                sum += self.forward_time(i)?;
            }
            let frac = a - m;
            if frac > 0.0 {
                sum += frac * self.forward_time(whole)?;
            }
            Ok(sum)
        } else {
            let k = (-m) as usize;
            let mut sum = 0.0;
            for i in 1..k {
                sum += self.backward_time(i)?;
            }
            sum += (m + 1.0 - a) * self.backward_time(k)?;
            Ok(-sum)
        }
    }

    /// The `a` with `integral(a) = v`.
    pub fn integral_inverse(&mut self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::NonFinite { coord: 0, value: v });
        }
        let mut cum = 0.0;
        if v >= 0.0 {
            let mut i = 0;
            loop {
                let t = self.forward_time(i)?;
                if cum + t > v {
                    return Ok(i as f64 + (v - cum) / t);
                }
                cum += t;
                i += 1;
            }
        } else {
            let w = -v;
            let mut i = 1;
            loop {
                let t = self.backward_time(i)?;
                if cum + t >= w {
                    return Ok(-((i - 1) as f64) - (w - cum) / t);
                }
                cum += t;
                i += 1;
            }
        }
    }
}

/// `∫₀ᵃ R_Φ(x)(u) du` for `x` on the section.
pub fn r_integral(sys: &GlobalSectionSystem, x: &Point, a: f64) -> Result<f64> {
    OrbitCells::new(sys, x)?.integral(a)
}

/// Solves `∫₀ᵃ R_Φ(x)(u) du = v` for `a`.
pub fn r_integral_inverse(sys: &GlobalSectionSystem, x: &Point, v: f64) -> Result<f64> {
    OrbitCells::new(sys, x)?.integral_inverse(v)
}

/// `k([x, t]) = Φ(x, t T_Φ(x))`.
pub fn k_eval(sys: &GlobalSectionSystem, p: &TorusPoint) -> Result<Point> {
    let x = sys.flow().canonicalize(&p.base.0)?;
    if !sys.on_section(&x)? {
        return Err(Error::NotOnSection(x.0));
    }
    if p.height == 0.0 {
        return sys.flow().eval(&x, 0.0);
    }
    let t = sys.return_time(&x)?;
    sys.flow().eval(&x, p.height * t)
}

/// `k⁻¹(y) = [x, s*/T_Φ(x)]` where `x = Φ(y, −s*)` is the last section point
/// on the orbit of `y`.
pub fn k_inverse(sys: &GlobalSectionSystem, y: &Point) -> Result<TorusPoint> {
    let (s, x) = sys.project_to_section(y)?;
    if s == 0.0 {
        return Ok(TorusPoint::new(x, 0.0));
    }
    let (t, next) = sys.first_return(&x)?;
    let height = s / t;
    if height >= 1.0 {
        return Ok(TorusPoint::new(next, 0.0));
    }
    Ok(TorusPoint::new(x, height))
}

/// `τ([x, t], s) = ∫₀^{s+t} R_Φ(x)(u) du − t T_Φ(x)`.
pub fn tau_eval(sys: &GlobalSectionSystem, p: &TorusPoint, s: f64) -> Result<f64> {
    TimeReparam::SectionDerived(Arc::new(sys.clone())).eval(&p.to_point(), s)
}

/// `l(x) = [x, 0]`.
pub fn unit_l(m: &MapSystem, x: &Point) -> Result<TorusPoint> {
    Ok(TorusPoint::new(m.canonicalize(&x.0)?, 0.0))
}

/// `P(Φ, X, S)` on objects.
pub fn poincare_system(sys: &Arc<GlobalSectionSystem>) -> MapSystem {
    MapSystem::poincare(sys.clone())
}

/// The unit `l: (f, X) → PΣ(f, X)`.
pub fn unit_morphism(m: &MapSystem) -> Result<MapMorphism> {
    let target = poincare_system(&Arc::new(suspend_system(m)?));
    Ok(MapMorphism::new(m.clone(), target, PointMap::Unit))
}

/// `l⁻¹: PΣ(f, X) → (f, X)`, `[x, 0] ↦ x`.
pub fn unit_inverse_morphism(m: &MapSystem) -> Result<MapMorphism> {
    let source = poincare_system(&Arc::new(suspend_system(m)?));
    Ok(MapMorphism::new(source, m.clone(), PointMap::UnitInverse))
}

/// The counit `(k, τ): ΣP(Φ, X, S) → (Φ, X, S)`.
pub fn counit_morphism(sys: &Arc<GlobalSectionSystem>) -> Result<WeakMorphism> {
    let source = Arc::new(suspend_system(&poincare_system(sys))?);
    Ok(WeakMorphism::new(
        source,
        sys.clone(),
        PointMap::Counit(sys.clone()),
        TimeReparam::SectionDerived(sys.clone()),
    ))
}

/// The inverse `(k⁻¹, τ⁻¹): (Φ, X, S) → ΣP(Φ, X, S)` of the counit.
pub fn counit_inverse_morphism(sys: &Arc<GlobalSectionSystem>) -> Result<WeakMorphism> {
    let target = Arc::new(suspend_system(&poincare_system(sys))?);
    Ok(WeakMorphism::new(
        sys.clone(),
        target,
        PointMap::CounitInverse(sys.clone()),
        TimeReparam::SectionDerivedInverse(sys.clone()),
    ))
}

/// `P` on a section-preserving morphism: its restriction to the sections,
/// as a morphism of Poincaré maps. No checks are run.
pub fn poincare_restriction(w: &WeakMorphism) -> MapMorphism {
    MapMorphism::new(
        poincare_system(w.source()),
        poincare_system(w.target()),
        w.map().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_get, System};
    use crate::sampling;
    use rand::Rng;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn sys(name: &str) -> Arc<GlobalSectionSystem> {
        match catalog_get(name, &BTreeMap::new()).unwrap() {
            System::Sectioned(s) => s,
            _ => panic!("{name} has no section"),
        }
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec())
    }

    #[test]
    fn r_integral_examples() {
        let phi1 = sys("annulus_phi1");
        let x = pt(&[1.5, 0.0]);
        assert!((r_integral(&phi1, &x, 2.5).unwrap() - 5.0).abs() < 1e-7);
        assert!((r_integral(&phi1, &x, -0.5).unwrap() + 1.0).abs() < 1e-7);
        assert_eq!(r_integral(&phi1, &x, 0.0).unwrap(), 0.0);
        let phi2 = sys("annulus_phi2");
        assert!((r_integral(&phi2, &x, 3.25).unwrap() - 3.25).abs() < 1e-7);
    }

    #[test]
    fn r_integral_matches_partial_sums() {
        let s = sys("annulus_radial_speed");
        let x = pt(&[1.3, 0.0]);
        let sums = s.return_time_partial_sums(&x, 4).unwrap();
        for (k, sum) in sums.iter().enumerate() {
            let v = r_integral(&s, &x, (k + 1) as f64).unwrap();
            assert!((v - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn r_integral_is_additive_along_the_orbit() {
        // ∫₀^{a+1} R(x) = T(x) + ∫₀^a R(Px)
        let s = sys("annulus_radial_speed");
        let mut rng = sampling::rng(3);
        for x in sampling::section_points(&s, 10, 3).unwrap() {
            let a = rng.gen_range(-3.0..3.0);
            let lhs = r_integral(&s, &x, a + 1.0).unwrap();
            let rhs = s.return_time(&x).unwrap()
                + r_integral(&s, &s.poincare_map(&x).unwrap(), a).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn r_integral_inverse_round_trips() {
        let s = sys("annulus_radial_speed");
        let x = pt(&[1.7, 0.0]);
        for a in [-4.3, -1.0, -0.2, 0.0, 0.6, 1.0, 5.9] {
            let v = r_integral(&s, &x, a).unwrap();
            let back = r_integral_inverse(&s, &x, v).unwrap();
            assert!((back - a).abs() < 1e-9, "{a} -> {v} -> {back}");
        }
    }

    #[test]
    fn integral_requires_section_point() {
        let s = sys("annulus_phi1");
        assert!(matches!(
            r_integral(&s, &pt(&[0.0, 1.5]), 1.0),
            Err(Error::NotOnSection(_))
        ));
    }

    #[test]
    fn k_eval_examples() {
        let x = pt(&[1.5, 0.0]);
        let y = k_eval(&sys("annulus_phi1"), &TorusPoint::new(x.clone(), 0.25)).unwrap();
        assert!(y[0].abs() < 1e-7 && (y[1] - 1.5).abs() < 1e-7, "{y:?}");
        let y = k_eval(&sys("annulus_phi2"), &TorusPoint::new(x.clone(), 0.5)).unwrap();
        assert!((y[0] + 1.5).abs() < 1e-7 && y[1].abs() < 1e-7);
        assert_eq!(
            k_eval(&sys("annulus_phi1"), &TorusPoint::new(x.clone(), 0.0)).unwrap(),
            x
        );
    }

    #[test]
    fn k_inverse_round_trips() {
        for name in [
            "annulus_phi1",
            "annulus_radial_speed",
            "suspension:circle_rotation",
        ] {
            let s = sys(name);
            let mut rng = sampling::rng(17);
            for x in sampling::section_points(&s, 10, 17).unwrap() {
                let p = TorusPoint::new(x, rng.gen_range(0.0..1.0));
                let y = k_eval(&s, &p).unwrap();
                let q = k_inverse(&s, &y).unwrap();
                assert!((q.height - p.height).abs() < 1e-7, "{name}: {p:?} vs {q:?}");
                assert!(s.flow().distance(&q.base, &p.base).unwrap() < 1e-7);
                let back = k_eval(&s, &q).unwrap();
                assert!(s.flow().distance(&back, &y).unwrap() < 1e-7);
            }
        }
    }

    #[test]
    fn tau_examples() {
        let x = pt(&[1.5, 0.0]);
        let phi1 = sys("annulus_phi1");
        let t = tau_eval(&phi1, &TorusPoint::new(x.clone(), 0.0), 1.0).unwrap();
        assert!((t - 2.0).abs() < 1e-7);
        let t = tau_eval(&phi1, &TorusPoint::new(x.clone(), 0.25), 0.5).unwrap();
        assert!((t - 1.0).abs() < 1e-7);
        let phi2 = sys("annulus_phi2");
        let t = tau_eval(&phi2, &TorusPoint::new(x.clone(), 0.5), -1.25).unwrap();
        assert!((t + 1.25).abs() < 1e-7);
        let s = sys("annulus_radial_speed");
        let t = tau_eval(&s, &TorusPoint::new(x, 0.0), 1.0).unwrap();
        assert!((t - 2.0 * PI / 1.5).abs() < 1e-7);
    }

    #[test]
    fn tau_is_a_reparametrization() {
        let s = sys("annulus_radial_speed");
        let p = TorusPoint::new(pt(&[1.2, 0.0]), 0.4);
        assert_eq!(tau_eval(&s, &p, 0.0).unwrap(), 0.0);
        let grid: Vec<f64> = (0..41).map(|i| -10.0 + 0.5 * i as f64).collect();
        let values = TimeReparam::SectionDerived(s.clone())
            .eval_many(&p.to_point(), &grid)
            .unwrap();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        // unbounded in both directions
        assert!(tau_eval(&s, &p, 200.0).unwrap() > 200.0);
        assert!(tau_eval(&s, &p, -200.0).unwrap() < -200.0);
    }

    #[test]
    fn tau_inverse_round_trips() {
        let s = sys("annulus_radial_speed");
        let fwd = TimeReparam::SectionDerived(s.clone());
        let inv = TimeReparam::SectionDerivedInverse(s.clone());
        let p = TorusPoint::new(pt(&[1.4, 0.0]), 0.3);
        let y = k_eval(&s, &p).unwrap();
        for u in [-7.0, -0.4, 0.0, 0.9, 12.0] {
            let sv = fwd.eval(&p.to_point(), u).unwrap();
            let back = inv.eval(&y, sv).unwrap();
            assert!((back - u).abs() < 1e-6, "{u} -> {sv} -> {back}");
        }
    }

    #[test]
    fn unit_examples() {
        let mut p = BTreeMap::new();
        p.insert("alpha".to_string(), 0.1);
        let System::Map(m) = catalog_get("circle_rotation", &p).unwrap() else {
            panic!()
        };
        assert_eq!(
            unit_l(&m, &pt(&[0.3])).unwrap(),
            TorusPoint::new(pt(&[0.3]), 0.0)
        );
        let l = unit_morphism(&m).unwrap();
        let img = l.apply(&pt(&[0.3])).unwrap();
        assert_eq!(img, pt(&[0.3, 0.0]));
        let back = unit_inverse_morphism(&m).unwrap().apply(&img).unwrap();
        assert_eq!(back, pt(&[0.3]));
    }
}
