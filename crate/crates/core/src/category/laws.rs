//! Sampled checks of morphism laws, naturality, triangle identities and rate
//! preservation.

use std::sync::Arc;

use crate::error::Result;
use crate::report::{CheckReport, ReportBuilder};
use crate::section::GlobalSectionSystem;
use crate::space::Point;
use crate::suspension::{suspend_morphism, suspend_system, TorusPoint};
use crate::systems::MapSystem;

use super::counit::{
    counit_inverse_morphism, counit_morphism, k_eval, k_inverse, poincare_restriction, tau_eval,
    unit_morphism,
};
use super::morphism::{MapMorphism, WeakMorphism};

/// Grid on which a time reparametrization must be strictly increasing.
const MONOTONE_GRID_POINTS: usize = 64;
const MONOTONE_GRID_SPAN: f64 = 10.0;

/// Flow time used to push section points just off the section.
const NEAR_OFFSET: f64 = 1e-3;

fn flat(x: &Point, extra: &[f64]) -> Vec<f64> {
    let mut v = x.0.clone();
    v.extend_from_slice(extra);
    v
}

/// `g(h(x)) = h(f(x))` on samples of the source.
pub fn map_morphism_check(h: &MapMorphism, samples: &[Point], tol: f64) -> CheckReport {
    let (f, g) = (h.source(), h.target());
    let mut report = ReportBuilder::new(format!("map morphism {} → {}", f.name(), g.name()), tol);
    for (i, x) in samples.iter().enumerate() {
        let r = (|| {
            let lhs = h.apply(&f.forward(x)?)?;
            let rhs = g.forward(&h.apply(x)?)?;
            g.distance(&lhs, &rhs)
        })();
        report.record(i, &x.0, r);
    }
    report.finish()
}

fn law_report(w: &WeakMorphism, samples: &[(Point, f64)], tol: f64, use_tau: bool) -> CheckReport {
    let (src, tgt) = (w.source().flow(), w.target().flow());
    let kind = if use_tau {
        "weak morphism"
    } else {
        "flow morphism"
    };
    let mut report = ReportBuilder::new(
        format!("{kind} {} → {}", w.source().name(), w.target().name()),
        tol,
    );
    for (i, (x, t)) in samples.iter().enumerate() {
        let r = (|| {
            let x = src.canonicalize(&x.0)?;
            let s = if use_tau { w.time(&x, *t)? } else { *t };
            let lhs = w.apply(&src.eval(&x, *t)?)?;
            let rhs = tgt.eval(&w.apply(&x)?, s)?;
            tgt.distance(&lhs, &rhs)
        })();
        report.record(i, &flat(x, &[*t]), r);
    }
    report.finish()
}

/// `h(Φ₁(x, t)) = Φ₂(h(x), t)`; the time part of `w` is ignored.
pub fn flow_morphism_check(w: &WeakMorphism, samples: &[(Point, f64)], tol: f64) -> CheckReport {
    law_report(w, samples, tol, false)
}

/// `h(Φ₁(x, t)) = Φ₂(h(x), τ(x, t))`, `τ(x, 0) = 0`, and `τ(x, ·)` strictly
/// increasing on a grid over `[-10, 10]`.
pub fn weak_morphism_check(w: &WeakMorphism, samples: &[(Point, f64)], tol: f64) -> CheckReport {
    let law = law_report(w, samples, tol, true);
    let src = w.source().flow();
    let mut zero = ReportBuilder::new("τ(x, 0) = 0", tol);
    let mut monotone = ReportBuilder::new("τ(x, ·) strictly increasing", 0.0);
    let grid: Vec<f64> = (0..MONOTONE_GRID_POINTS)
        .map(|i| {
            -MONOTONE_GRID_SPAN
                + 2.0 * MONOTONE_GRID_SPAN * i as f64 / (MONOTONE_GRID_POINTS - 1) as f64
        })
        .collect();
    for (i, (x, _)) in samples.iter().enumerate() {
        let x = match src.canonicalize(&x.0) {
            Ok(x) => x,
            Err(e) => {
                zero.record(i, &x.0, Err(e));
                continue;
            }
        };
        zero.record(i, &x.0, w.time(&x, 0.0).map(f64::abs));
        match w.tau().eval_many(&x, &grid) {
            Ok(values) => {
                if let Some(j) = values
                    .windows(2)
                    .position(|p| p[1] <= p[0] || p[1].is_nan())
                {
                    monotone.violation(
                        i,
                        &x.0,
                        format!(
                            "τ(x, {}) = {} is not below τ(x, {}) = {}",
                            grid[j],
                            values[j],
                            grid[j + 1],
                            values[j + 1]
                        ),
                    );
                } else {
                    monotone.record(i, &x.0, Ok(0.0));
                }
            }
            Err(e) => monotone.record(i, &x.0, Err(e)),
        }
    }
    CheckReport::merge(law.name.clone(), &[law, zero.finish(), monotone.finish()])
}

/// Section points, points just off the section on either side, and points
/// halfway to the next return.
pub fn section_preservation_samples(
    sys: &GlobalSectionSystem,
    section_points: &[Point],
) -> Result<Vec<Point>> {
    let fl = sys.flow();
    let mut out = Vec::with_capacity(4 * section_points.len());
    for x in section_points {
        let t = sys.return_time(x)?;
        out.push(fl.canonicalize(&x.0)?);
        out.push(fl.eval(x, NEAR_OFFSET)?);
        out.push(fl.eval(x, -NEAR_OFFSET)?);
        out.push(fl.eval(x, 0.5 * t)?);
    }
    Ok(out)
}

/// `y ∈ S₁ ⇔ h(y) ∈ S₂` on every sample.
pub fn section_preservation_check(w: &WeakMorphism, samples: &[Point]) -> CheckReport {
    let (src, tgt) = (w.source(), w.target());
    let mut report = ReportBuilder::new(
        format!("section preservation {} → {}", src.name(), tgt.name()),
        0.0,
    );
    for (i, y) in samples.iter().enumerate() {
        let r = (|| Ok((src.on_section(y)?, tgt.on_section(&w.apply(y)?)?)))();
        match r {
            Ok((a, b)) if a == b => report.record(i, &y.0, Ok(0.0)),
            Ok((a, _)) => report.violation(
                i,
                &y.0,
                if a {
                    "section point mapped off the target section"
                } else {
                    "point off the section mapped onto the target section"
                },
            ),
            Err(e) => report.record(i, &y.0, Err(e)),
        }
    }
    report.finish()
}

fn gate_section_preservation(w: &WeakMorphism, section_points: &[Point]) -> Result<()> {
    let samples = section_preservation_samples(w.source(), section_points)?;
    section_preservation_check(w, &samples).gate()?;
    Ok(())
}

fn section_points_of(samples: &[(Point, f64, f64)]) -> Vec<Point> {
    samples.iter().map(|(x, _, _)| x.clone()).collect()
}

/// `T₂(h(x)) = τ(x, T₁(x))` for `x` on the source section.
pub fn period_correspondence_check(
    w: &WeakMorphism,
    section_points: &[Point],
    tol: f64,
) -> Result<CheckReport> {
    gate_section_preservation(w, section_points)?;
    let (src, tgt) = (w.source(), w.target());
    let mut report = ReportBuilder::new(
        format!("period correspondence {} → {}", src.name(), tgt.name()),
        tol,
    );
    for (i, x) in section_points.iter().enumerate() {
        let r = (|| {
            let t1 = src.return_time(x)?;
            let t2 = tgt.return_time(&w.apply(x)?)?;
            Ok((t2 - w.time(x, t1)?).abs())
        })();
        report.record(i, &x.0, r);
    }
    Ok(report.finish())
}

/// `P` on morphisms, gated on section preservation.
pub fn poincare_functor_on_morphism(
    w: &WeakMorphism,
    section_points: &[Point],
) -> Result<MapMorphism> {
    gate_section_preservation(w, section_points)?;
    Ok(poincare_restriction(w))
}

/// `σ(Φ₁(x, tT₁(x)), τ₁([x, t], s)) = τ₂([h(x), t], s)` for `x ∈ S₁`,
/// `t ∈ [0, 1)`. Gated on section preservation.
pub fn rate_preserving_check(
    w: &WeakMorphism,
    samples: &[(Point, f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    gate_section_preservation(w, &section_points_of(samples))?;
    Ok(rate_report(w, samples, tol))
}

fn rate_report(w: &WeakMorphism, samples: &[(Point, f64, f64)], tol: f64) -> CheckReport {
    let (src, tgt) = (w.source(), w.target());
    let mut report = ReportBuilder::new(
        format!("rate preservation {} → {}", src.name(), tgt.name()),
        tol,
    );
    for (i, (x, t, s)) in samples.iter().enumerate() {
        let r = (|| {
            let p = TorusPoint::new(x.clone(), *t);
            let lhs = w.time(&k_eval(src, &p)?, tau_eval(src, &p, *s)?)?;
            let rhs = tau_eval(tgt, &TorusPoint::new(w.apply(x)?, *t), *s)?;
            Ok((lhs - rhs).abs())
        })();
        report.record(i, &flat(x, &[*t, *s]), r);
    }
    report.finish()
}

/// `σ(x, tT₁(x)) = t σ(x, T₁(x))` for rate-preserving `(h, σ)`. Gated on
/// the rate-preservation check over the same samples.
pub fn rate_scaling_check(
    w: &WeakMorphism,
    samples: &[(Point, f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    rate_preserving_check(w, samples, tol)?.gate()?;
    let src = w.source();
    let mut report = ReportBuilder::new(
        format!("rate scaling {} → {}", src.name(), w.target().name()),
        tol,
    );
    for (i, (x, t, _)) in samples.iter().enumerate() {
        let r = (|| {
            let period = src.return_time(x)?;
            let values = w.tau().eval_many(x, &[t * period, period])?;
            Ok((values[0] - t * values[1]).abs())
        })();
        report.record(i, &flat(x, &[*t]), r);
    }
    Ok(report.finish())
}

/// Rate preservation of `w2 ∘ w1`, gated on both factors being rate
/// preserving. `samples` lie on the section of `w1`'s source.
pub fn rate_composition_check(
    w2: &WeakMorphism,
    w1: &WeakMorphism,
    samples: &[(Point, f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    rate_preserving_check(w1, samples, tol)?.gate()?;
    let image: Vec<(Point, f64, f64)> = samples
        .iter()
        .map(|(x, t, s)| Ok((w1.apply(x)?, *t, *s)))
        .collect::<Result<_>>()?;
    rate_preserving_check(w2, &image, tol)?.gate()?;
    rate_preserving_check(&w2.compose(w1)?, samples, tol)
}

/// Both naturality squares of the counit for `w`: `h ∘ k₁ = k₂ ∘ Σ(P(h))` on
/// `[x, t]`, and the time square `σ(k₁[x, t], τ₁([x, t], s)) = τ₂([h(x), t], s)`.
pub fn naturality_check_k(
    w: &WeakMorphism,
    samples: &[(Point, f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    gate_section_preservation(w, &section_points_of(samples))?;
    let (src, tgt) = (w.source(), w.target());
    let mut space = ReportBuilder::new(
        format!("counit naturality (space) {} → {}", src.name(), tgt.name()),
        tol,
    );
    for (i, (x, t, _)) in samples.iter().enumerate() {
        let r = (|| {
            let lhs = w.apply(&k_eval(src, &TorusPoint::new(x.clone(), *t))?)?;
            let rhs = k_eval(tgt, &TorusPoint::new(w.apply(x)?, *t))?;
            tgt.flow().distance(&lhs, &rhs)
        })();
        space.record(i, &flat(x, &[*t]), r);
    }
    let mut time = rate_report(w, samples, tol);
    time.name = format!("counit naturality (time) {} → {}", src.name(), tgt.name());
    Ok(CheckReport::merge(
        format!("counit naturality {} → {}", src.name(), tgt.name()),
        &[space.finish(), time],
    ))
}

/// `PΣ(h) ∘ l_f = l_g ∘ h`, gated on `h` being a morphism on `samples`.
pub fn naturality_check_l(h: &MapMorphism, samples: &[Point], tol: f64) -> Result<CheckReport> {
    map_morphism_check(h, samples, tol).gate()?;
    let bar = suspend_morphism(h)?;
    let target = bar.target().clone();
    let mut report = ReportBuilder::new(
        format!(
            "unit naturality {} → {}",
            h.source().name(),
            h.target().name()
        ),
        tol,
    );
    for (i, x) in samples.iter().enumerate() {
        let r = (|| {
            let lf = TorusPoint::new(h.source().canonicalize(&x.0)?, 0.0).to_point();
            let lhs = bar.apply(&lf)?;
            let rhs = TorusPoint::new(h.apply(x)?, 0.0).to_point();
            target.flow().distance(&lhs, &rhs)
        })();
        report.record(i, &x.0, r);
    }
    Ok(report.finish())
}

/// `(k, τ)_{Σf} ∘ Σ(l_f) = id_{Σf}` on `[x, t]`, in space and in time
/// (`τ([[x, 0], t], s) = s`). Samples are `(x, t, s)` with `x` in the base.
pub fn triangle_identity_1(
    m: &MapSystem,
    samples: &[(Point, f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    let sm = Arc::new(suspend_system(m)?);
    let sigma_l = suspend_morphism(&unit_morphism(m)?)?;
    let composite = counit_morphism(&sm)?.compose(&sigma_l)?;
    let mut space =
        ReportBuilder::new(format!("triangle identity (space) at Σ({})", m.name()), tol);
    let mut time = ReportBuilder::new(format!("triangle identity (time) at Σ({})", m.name()), tol);
    for (i, (x, t, s)) in samples.iter().enumerate() {
        let sample = flat(x, &[*t, *s]);
        let p = match m.canonicalize(&x.0) {
            Ok(b) => TorusPoint::new(b, *t).to_point(),
            Err(e) => {
                space.record(i, &sample, Err(e));
                continue;
            }
        };
        space.record(
            i,
            &sample,
            composite.apply(&p).and_then(|q| sm.flow().distance(&q, &p)),
        );
        time.record(i, &sample, composite.time(&p, *s).map(|u| (u - s).abs()));
    }
    Ok(CheckReport::merge(
        format!("triangle identity at Σ({})", m.name()),
        &[space.finish(), time.finish()],
    ))
}

/// `P((k, τ)_Φ) ∘ l_{PΦ} = id_{PΦ}` on section points.
pub fn triangle_identity_2(
    sys: &Arc<GlobalSectionSystem>,
    section_points: &[Point],
    tol: f64,
) -> Result<CheckReport> {
    let composite = poincare_restriction(&counit_morphism(sys)?)
        .compose(&unit_morphism(&MapSystem::poincare(sys.clone()))?)?;
    let mut report = ReportBuilder::new(format!("triangle identity at P({})", sys.name()), tol);
    for (i, x) in section_points.iter().enumerate() {
        let r = composite.apply(x).and_then(|y| sys.flow().distance(&y, x));
        report.record(i, &x.0, r);
    }
    Ok(report.finish())
}

/// `k ∘ k⁻¹ = id` on phase points and `k⁻¹ ∘ k = id` on `[x, t]` samples.
pub fn counit_bijectivity_check(
    sys: &Arc<GlobalSectionSystem>,
    phase_points: &[Point],
    torus_points: &[TorusPoint],
    tol: f64,
) -> Result<CheckReport> {
    let torus = suspend_system(&MapSystem::poincare(sys.clone()))?;
    let mut right = ReportBuilder::new(format!("k ∘ k⁻¹ = id on {}", sys.name()), tol);
    for (i, y) in phase_points.iter().enumerate() {
        let r = k_inverse(sys, y)
            .and_then(|p| k_eval(sys, &p))
            .and_then(|z| sys.flow().distance(&z, y));
        right.record(i, &y.0, r);
    }
    let mut left = ReportBuilder::new(format!("k⁻¹ ∘ k = id on Σ(P({}))", sys.name()), tol);
    for (i, p) in torus_points.iter().enumerate() {
        let r = k_eval(sys, p)
            .and_then(|y| k_inverse(sys, &y))
            .and_then(|q| torus.flow().distance(&q.to_point(), &p.to_point()));
        left.record(i, &p.to_point().0, r);
    }
    Ok(CheckReport::merge(
        format!("bijectivity of k on {}", sys.name()),
        &[right.finish(), left.finish()],
    ))
}

/// `(k₂, τ₂) ∘ Σ(P(h, τ)) ∘ (k₁, τ₁)⁻¹`: the rate-preserving morphism with
/// the same section restriction as `w`. Gated on `w` being a weak morphism
/// and preserving sections.
pub fn promote_to_rate_preserving(
    w: &WeakMorphism,
    weak_samples: &[(Point, f64)],
    section_points: &[Point],
    tol: f64,
) -> Result<WeakMorphism> {
    weak_morphism_check(w, weak_samples, tol).gate()?;
    let restricted = poincare_functor_on_morphism(w, section_points)?;
    let k1_inv = counit_inverse_morphism(w.source())?;
    let bar = suspend_morphism(&restricted)?;
    let k2 = counit_morphism(w.target())?;
    k2.compose(&bar.compose(&k1_inv)?)
}
