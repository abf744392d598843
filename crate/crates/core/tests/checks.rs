use std::collections::BTreeMap;

use flowsection::category::counit_bijectivity_check;
use flowsection::suspension::{suspension_law_check, suspension_return_check};
use flowsection::{catalog_get, parse, sampling, MapSystem, Space, System, TorusPoint};

fn map(name: &str) -> MapSystem {
    match catalog_get(name, &BTreeMap::new()).unwrap() {
        System::Map(m) => m,
        _ => panic!(),
    }
}

#[test]
fn inverse_identity_check_passes_on_catalog_sections() {
    for name in [
        "annulus_phi1",
        "annulus_radial_speed",
        "suspension:interval_identity",
    ] {
        let System::Sectioned(s) = catalog_get(name, &BTreeMap::new()).unwrap() else {
            panic!()
        };
        let r = s.inverse_identity_check(&sampling::section_points(&s, 20, 1).unwrap(), 1e-6);
        assert!(r.pass, "{name}: {r:?}");
        assert_eq!(r.samples_used, 20);
    }
}

#[test]
fn suspension_checks_pass_for_rotations() {
    let m = map("circle_rotation");
    let samples: Vec<_> = sampling::map_torus_samples(&m, 50, 4.0, 2)
        .unwrap()
        .into_iter()
        .map(|(x, t, s)| (TorusPoint::new(x, t).to_point(), s, 1.0 - s))
        .collect();
    assert!(suspension_law_check(&m, &samples, 1e-12).pass);
    let pts = sampling::map_points(&m, 20, 2).unwrap();
    assert!(suspension_return_check(&m, &pts, 1e-10).unwrap().pass);
}

#[test]
fn suspension_return_check_needs_a_homeomorphism() {
    let m = MapSystem::from_exprs(
        "wrong_inverse",
        Space::circle(1.0).unwrap(),
        vec![parse("x1 + 0.1").unwrap()],
        vec![parse("x1 + 0.1").unwrap()],
        BTreeMap::new(),
    )
    .unwrap();
    let pts = sampling::map_points(&m, 5, 3).unwrap();
    assert!(suspension_return_check(&m, &pts, 1e-10).is_err());
}

#[test]
fn counit_bijectivity_on_radial_speed() {
    let System::Sectioned(s) = catalog_get("annulus_radial_speed", &BTreeMap::new()).unwrap()
    else {
        panic!()
    };
    let phase = sampling::flow_points(s.flow(), 20, 4).unwrap();
    let torus: Vec<_> = sampling::torus_samples(&s, 20, 1.0, 4)
        .unwrap()
        .into_iter()
        .map(|(x, t, _)| TorusPoint::new(x, t))
        .collect();
    let r = counit_bijectivity_check(&s, &phase, &torus, 1e-6).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.samples_used, 20);
}
