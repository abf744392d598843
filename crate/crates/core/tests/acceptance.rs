//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use flowsection::catalog::{catalog_map_names, catalog_section_names};
use flowsection::category::*;
use flowsection::sampling;
use flowsection::suspension::{suspension_eval, torus_distance};
use flowsection::{
    catalog_get, parse, suspend_system, GlobalSectionSystem, MapSystem, Point, Result, System,
    TorusPoint,
};

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

/// Running maximum of residuals checked against one tolerance.
struct Max {
    label: String,
    tol: f64,
    max: f64,
    count: usize,
}

impl Max {
    fn new(label: impl Into<String>, tol: f64) -> Self {
        Max {
            label: label.into(),
            tol,
            max: 0.0,
            count: 0,
        }
    }

    fn add(&mut self, r: f64) {
        self.count += 1;
        self.max = if r.is_nan() {
            f64::INFINITY
        } else {
            self.max.max(r)
        };
    }

    fn ok(&self) -> bool {
        self.count > 0 && self.max <= self.tol
    }

    fn line(&self) -> String {
        format!(
            "{} max {:.2e} ≤ {:.0e} over {}",
            self.label, self.max, self.tol, self.count
        )
    }
}

fn outcome(parts: &[Max]) -> Outcome {
    Outcome {
        pass: parts.iter().all(Max::ok),
        detail: parts.iter().map(Max::line).collect::<Vec<_>>().join("; "),
    }
}

fn from_reports(reports: &[flowsection::CheckReport]) -> Outcome {
    Outcome {
        pass: reports.iter().all(|r| r.pass),
        detail: reports
            .iter()
            .map(|r| {
                format!(
                    "{}: {} (max {:.2e} ≤ {:.0e})",
                    r.name,
                    if r.pass { "ok" } else { "FAIL" },
                    r.max_residual,
                    r.tolerance
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn sectioned(name: &str) -> Arc<GlobalSectionSystem> {
    match catalog_get(name, &BTreeMap::new()).unwrap() {
        System::Sectioned(s) => s,
        _ => panic!("{name} has no section"),
    }
}

fn map(name: &str) -> MapSystem {
    match catalog_get(name, &BTreeMap::new()).unwrap() {
        System::Map(m) => m,
        _ => panic!("{name} is not a map"),
    }
}

fn radius(x: &Point) -> f64 {
    x[0].hypot(x[1])
}

fn annulus_example() -> Result<Outcome> {
    let mut parts = Vec::new();
    for (name, period) in [("annulus_phi1", 2.0), ("annulus_phi2", 1.0)] {
        let s = sectioned(name);
        let mut disp = Max::new(format!("{name} |P(x) - x|"), 1e-6);
        let mut time = Max::new(format!("{name} |T - {period}|"), 1e-6);
        for x in sampling::section_points(&s, 50, SEED)? {
            let (t, p) = s.first_return(&x)?;
            disp.add(s.flow().distance(&p, &x)?);
            time.add((t - period).abs());
        }
        parts.extend([disp, time]);
    }
    Ok(outcome(&parts))
}

fn inverse_identities() -> Result<Outcome> {
    let mut round = Max::new("d(PΨ(PΦ(x)), x)", 1e-6);
    let mut times = Max::new("|T_Ψ(x) - T_Φ(PΨ(x))|", 1e-6);
    for name in catalog_section_names() {
        let s = sectioned(&name);
        for x in sampling::section_points(&s, 100, SEED)? {
            round.add(
                s.flow()
                    .distance(&s.poincare_inverse(&s.poincare_map(&x)?)?, &x)?,
            );
            let back = s.poincare_inverse(&x)?;
            times.add((s.backward_return_time(&x)? - s.return_time(&back)?).abs());
        }
    }
    Ok(outcome(&[round, times]))
}

fn suspension_exactness() -> Result<Outcome> {
    let mut identity = Max::new("d(Σf(p, 0), p)", 1e-12);
    let mut group = Max::new("d(Σf(Σf(p, s₁), s₂), Σf(p, s₁ + s₂))", 1e-12);
    let mut turn = Max::new("Σf([x, 0], 1) vs [f(x), 0] (exact)", 0.0);
    for name in ["circle_rotation", "interval_identity"] {
        let m = map(name);
        for (x, h, s1) in sampling::map_torus_samples(&m, 1000, 5.0, SEED)? {
            let p = TorusPoint::new(x.clone(), h);
            let s2 = -0.37 * s1 + 1.3;
            identity.add(torus_distance(&m, &suspension_eval(&m, &p, 0.0)?, &p)?);
            let nested = suspension_eval(&m, &suspension_eval(&m, &p, s1)?, s2)?;
            group.add(torus_distance(
                &m,
                &nested,
                &suspension_eval(&m, &p, s1 + s2)?,
            )?);
            let full = suspension_eval(&m, &TorusPoint::new(x.clone(), 0.0), 1.0)?;
            turn.add(if full == TorusPoint::new(m.forward(&x)?, 0.0) {
                0.0
            } else {
                f64::INFINITY
            });
        }
    }
    Ok(outcome(&[identity, group, turn]))
}

fn poincare_of_suspension() -> Result<Outcome> {
    let mut time = Max::new("|T_Σf([x, 0]) - 1|", 1e-10);
    let mut base = Max::new("d(PΣf([x, 0]), [f(x), 0])", 1e-10);
    for name in catalog_map_names() {
        let m = map(name);
        let s = suspend_system(&m)?;
        for x in sampling::map_points(&m, 100, SEED)? {
            let (t, p) = s.first_return(&TorusPoint::new(x.clone(), 0.0).to_point())?;
            time.add((t - 1.0).abs());
            base.add(
                s.flow()
                    .distance(&p, &TorusPoint::new(m.forward(&x)?, 0.0).to_point())?,
            );
        }
    }
    Ok(outcome(&[time, base]))
}

fn counit_weak_law() -> Result<Outcome> {
    let mut reports = Vec::new();
    let mut k_oracle = Max::new("|k([x, t]) - x e^{2πit}|", 1e-6);
    let mut tau_oracle = Max::new("|τ([x, t], s) - s T(x)|", 1e-6);
    for (name, speed) in [
        ("annulus_phi1", (|_: f64| PI) as fn(f64) -> f64),
        ("annulus_phi2", |_| 2.0 * PI),
        ("annulus_radial_speed", |r| r),
    ] {
        let s = sectioned(name);
        let k = counit_morphism(&s)?;
        let samples = sampling::torus_samples(&s, 200, 3.0, SEED)?;
        let timed: Vec<(Point, f64)> = samples
            .iter()
            .map(|(x, t, u)| (TorusPoint::new(x.clone(), *t).to_point(), *u))
            .collect();
        reports.push(weak_morphism_check(&k, &timed, 1e-6));
        for (x, t, u) in samples.iter().take(50) {
            let r = radius(x);
            let p = TorusPoint::new(x.clone(), *t);
            let y = k_eval(&s, &p)?;
            let expected = Point::new(vec![r * (2.0 * PI * t).cos(), r * (2.0 * PI * t).sin()]);
            k_oracle.add(s.flow().distance(&y, &expected)?);
            tau_oracle.add((tau_eval(&s, &p, *u)? - u * 2.0 * PI / speed(r)).abs());
        }
    }
    let mut out = from_reports(&reports);
    let oracle = outcome(&[k_oracle, tau_oracle]);
    out.pass &= oracle.pass;
    out.detail = format!("{}; {}", out.detail, oracle.detail);
    Ok(out)
}

fn counit_bijective() -> Result<Outcome> {
    let mut right = Max::new("d(k(k⁻¹(y)), y)", 1e-6);
    let mut left = Max::new("d(k⁻¹(k(p)), p)", 1e-6);
    for name in catalog_section_names() {
        let s = sectioned(&name);
        let torus = suspend_system(&poincare_system(&s))?;
        for y in sampling::flow_points(s.flow(), 100, SEED)? {
            right.add(s.flow().distance(&k_eval(&s, &k_inverse(&s, &y)?)?, &y)?);
        }
        for (x, t, _) in sampling::torus_samples(&s, 100, 1.0, SEED)? {
            let p = TorusPoint::new(x, t);
            let back = k_inverse(&s, &k_eval(&s, &p)?)?;
            left.add(torus.flow().distance(&back.to_point(), &p.to_point())?);
        }
    }
    Ok(outcome(&[right, left]))
}

fn triangle_identities() -> Result<Outcome> {
    let mut reports = Vec::new();
    for name in catalog_map_names() {
        let m = map(name);
        reports.push(triangle_identity_1(
            &m,
            &sampling::map_torus_samples(&m, 100, 3.0, SEED)?,
            1e-9,
        )?);
    }
    for name in catalog_section_names() {
        let s = sectioned(&name);
        reports.push(triangle_identity_2(
            &s,
            &sampling::section_points(&s, 100, SEED)?,
            1e-6,
        )?);
    }
    Ok(from_reports(&reports))
}

fn half_speed() -> Result<WeakMorphism> {
    WeakMorphism::from_exprs(
        sectioned("annulus_phi1"),
        sectioned("annulus_phi2"),
        None,
        Some(parse("t/2")?),
        BTreeMap::new(),
    )
}

fn shift_by_half(m: &MapSystem) -> Result<MapMorphism> {
    MapMorphism::from_exprs(
        m.clone(),
        m.clone(),
        vec![parse("x1 + 0.5")?],
        BTreeMap::new(),
    )
}

fn naturality() -> Result<Outcome> {
    let mut reports = Vec::new();
    for name in ["annulus_phi1", "annulus_phi2", "annulus_radial_speed"] {
        let w = WeakMorphism::identity(sectioned(name));
        let samples = sampling::torus_samples(w.source(), 100, 3.0, SEED)?;
        reports.push(naturality_check_k(&w, &samples, 1e-6)?);
    }
    let w = half_speed()?;
    reports.push(naturality_check_k(
        &w,
        &sampling::torus_samples(w.source(), 100, 3.0, SEED)?,
        1e-6,
    )?);
    for name in catalog_map_names() {
        let m = map(name);
        let pts = sampling::map_points(&m, 100, SEED)?;
        reports.push(naturality_check_l(&MapMorphism::identity(m), &pts, 1e-6)?);
    }
    let rot = map("circle_rotation");
    let pts = sampling::map_points(&rot, 100, SEED)?;
    reports.push(naturality_check_l(&shift_by_half(&rot)?, &pts, 1e-6)?);
    Ok(from_reports(&reports))
}

fn rate_preservation() -> Result<Outcome> {
    let mut reports = Vec::new();
    for name in [
        "annulus_phi1",
        "annulus_radial_speed",
        "suspension:circle_rotation",
    ] {
        let w = WeakMorphism::identity(sectioned(name));
        let samples = sampling::torus_samples(w.source(), 50, 3.0, SEED)?;
        let mut r = rate_preserving_check(&w, &samples, 1e-12)?;
        r.name = format!("identity {}", r.name);
        reports.push(r);
    }
    for name in catalog_section_names() {
        let k = counit_morphism(&sectioned(&name))?;
        let samples = sampling::torus_samples(k.source(), 50, 3.0, SEED)?;
        reports.push(rate_preserving_check(&k, &samples, 1e-6)?);
        reports.push(rate_scaling_check(&k, &samples, 1e-6)?);
    }
    let a = half_speed()?;
    let k1 = counit_morphism(a.source())?;
    let samples = sampling::torus_samples(k1.source(), 50, 3.0, SEED)?;
    reports.push(rate_composition_check(&a, &k1, &samples, 1e-6)?);
    let samples = sampling::torus_samples(a.source(), 50, 3.0, SEED)?;
    reports.push(rate_scaling_check(&a, &samples, 1e-6)?);
    Ok(from_reports(&reports))
}

fn divergence_proxy() -> Result<Outcome> {
    const N: usize = 10_000;
    let s = sectioned("annulus_phi2");
    let t_min = s.tolerances().t_min;
    let x = sampling::section_points(&s, 1, SEED)?.remove(0);
    let sums = s.return_time_partial_sums(&x, N)?;
    let increasing = sums.windows(2).all(|w| w[1] > w[0]);
    let bounded = sums
        .iter()
        .enumerate()
        .all(|(k, v)| *v >= (k + 1) as f64 * t_min);
    Ok(Outcome {
        pass: sums.len() == N && increasing && bounded,
        detail: format!(
            "N = {N}: strictly increasing {increasing}, k-th sum ≥ k·t_min {bounded}, final sum {:.6}",
            sums.last().copied().unwrap_or(f64::NAN)
        ),
    })
}

fn ode_agreement() -> Result<Outcome> {
    let with_step = |step: f64| -> Result<f64> {
        let mut p = BTreeMap::new();
        p.insert("step".to_string(), step);
        let System::Sectioned(s) = catalog_get("annulus_rotation_ode", &p)? else {
            unreachable!()
        };
        let closed = sectioned("annulus_phi2");
        let mut worst: f64 = 0.0;
        for x in sampling::section_points(&closed, 10, SEED)? {
            worst = worst.max((s.return_time(&x)? - closed.return_time(&x)?).abs());
        }
        Ok(worst)
    };
    let coarse = with_step(1e-3)?;
    let fine = with_step(5e-4)?;
    let ratio = coarse / fine;
    Ok(Outcome {
        pass: coarse <= 1e-5 && ratio >= 4.0,
        detail: format!("|T_ode - T| at step 1e-3: {coarse:.2e} ≤ 1e-5; at 5e-4: {fine:.2e}; ratio {ratio:.1} ≥ 4"),
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("annulus example: identity Poincaré maps", annulus_example),
        ("inverse identities", inverse_identities),
        ("suspension exactness", suspension_exactness),
        ("round trip P∘Σ", poincare_of_suspension),
        ("k/τ weak-morphism law", counit_weak_law),
        ("bijectivity of k", counit_bijective),
        ("triangle identities", triangle_identities),
        ("naturality", naturality),
        ("rate preservation", rate_preservation),
        ("divergence proxy", divergence_proxy),
        ("ODE vs closed form", ode_agreement),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        let secs = start.elapsed().as_secs_f64();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name} ({secs:.2}s): {}",
            i + 1,
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
