use std::f64::consts::E;

use ringmod::geometry::{GeodesicAnnulus, MetricChart};
use ringmod::modulus::Sampling;
use ringmod::ringmap::{
    estimate_minimal_constant_q, eta_battery, modulus_of_continuity, ring_rhs, verify_ring_inequality, EtaProfile,
    MappingSpec, QField,
};
use ringmod::Error;

fn plane() -> MetricChart {
    MetricChart::euclidean(2, 3.0)
}

#[test]
fn identity_satisfies_the_ring_inequality_in_the_plane() {
    let chart = plane();
    let x0 = [0.0, 0.0];
    let id = MappingSpec::identity(&chart, &x0).unwrap();
    let q = QField::constant(1.0).unwrap();
    let s = Sampling::new(2048, 1).with_resolution(160);
    for p in [1.5, 2.0] {
        for (r1, r2) in [(0.5, 1.0), (1.0, E), (0.3, 1.5)] {
            let r = verify_ring_inequality(&id, &x0, &q, p, r1, r2, &[], None, &s).unwrap();
            assert!(r.pass, "p = {p}, ({r1}, {r2}): {:?}", r.checks);
            assert_eq!(r.checks.len(), 4);
            assert!(r.extremal().ratio > 0.9);
        }
    }
}

#[test]
fn identity_satisfies_the_ring_inequality_in_space() {
    let chart = MetricChart::euclidean(3, 3.0);
    let x0 = [0.0; 3];
    let id = MappingSpec::identity(&chart, &x0).unwrap();
    let q = QField::constant(1.0).unwrap();
    let s = Sampling::new(4096, 1).with_resolution(32);
    for p in [2.5, 3.0] {
        for (r1, r2) in [(0.5, 1.0), (1.0, 2.0), (0.4, 1.6)] {
            let r = verify_ring_inequality(&id, &x0, &q, p, r1, r2, &[], None, &s).unwrap();
            assert!(r.pass, "p = {p}, ({r1}, {r2}): {:?}", r.checks);
        }
    }
}

#[test]
fn user_profiles_are_checked() {
    let chart = plane();
    let x0 = [0.0, 0.0];
    let f = MappingSpec::radial_stretch(&chart, &x0, 0.5).unwrap();
    let q = QField::constant(2.0).unwrap();
    let s = Sampling::new(1024, 1).with_resolution(128);
    let good = EtaProfile::uniform(1.0, E).unwrap();
    let r = verify_ring_inequality(&f, &x0, &q, 2.0, 1.0, E, &[good], None, &s).unwrap();
    assert_eq!(r.checks.len(), 5);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);

    let short = EtaProfile::uniform(1.0, 2.0).unwrap();
    assert!(verify_ring_inequality(&f, &x0, &q, 2.0, 1.0, E, &[short], None, &s).is_err());
    let unnormalized = EtaProfile::uniform(1.0, E).unwrap().scaled(0.5);
    assert!(verify_ring_inequality(&f, &x0, &q, 2.0, 1.0, E, &[unnormalized], None, &s).is_err());
    assert!(matches!(
        EtaProfile::new("neg", vec![1.0, 2.0, E], vec![1.0, -1.0]),
        Err(Error::InvalidProfile(_))
    ));
}

#[test]
fn battery_profiles_are_admissible() {
    let chart = plane();
    let ann = GeodesicAnnulus::new(&chart, &[0.0, 0.0], 1.0, E).unwrap();
    let q = QField::from_expr("1 + x^2", 2).unwrap();
    for eta in eta_battery(&ann, &q, 2.0, 7).unwrap() {
        eta.check_normalized(1e-6).unwrap();
        assert!(ring_rhs(&ann, &q, 2.0, &eta).unwrap() > 0.0);
    }
}

#[test]
fn dilation_preserves_conformal_modulus() {
    let src = plane();
    let dst = MetricChart::euclidean(2, 7.0);
    let x0 = [0.0, 0.0];
    let f = MappingSpec::user_analytic(&src, &dst, &x0, &["2*x", "2*y"]).unwrap();
    let est = estimate_minimal_constant_q(&f, &x0, 2.0, &[(1.0, E)], &Sampling::new(2048, 1).with_resolution(160))
        .unwrap();
    assert!((est.value - 1.0).abs() < 0.02, "{}", est.value);
}

#[test]
fn minimal_constant_for_stretch_in_space() {
    let chart = MetricChart::euclidean(3, 3.0);
    let x0 = [0.0; 3];
    let f = MappingSpec::radial_stretch(&chart, &x0, 0.5).unwrap();
    let est = estimate_minimal_constant_q(&f, &x0, 3.0, &[(1.0, 2.0)], &Sampling::new(16384, 1).with_resolution(40))
        .unwrap();
    assert!((est.value / 4.0 - 1.0).abs() <= 0.05, "{}", est.value);
}

#[test]
fn continuity_modulus_of_stretch() {
    let chart = plane();
    let x0 = [0.0, 0.0];
    let id = modulus_of_continuity(&MappingSpec::identity(&chart, &x0).unwrap(), &x0, &[0.0, 0.1, 0.01]).unwrap();
    assert_eq!(id[0], (0.0, 0.0));
    for (e, w) in &id[1..] {
        assert!((w - e).abs() < 1e-12);
    }
    let st = modulus_of_continuity(&MappingSpec::radial_stretch(&chart, &x0, 0.5).unwrap(), &x0, &[0.01]).unwrap();
    assert!((st[0].1 - 0.1).abs() < 1e-12);
    assert!(modulus_of_continuity(&MappingSpec::identity(&chart, &x0).unwrap(), &x0, &[-1.0]).is_err());
}

#[test]
fn maps_reject_points_outside_their_charts() {
    let chart = plane();
    assert!(MappingSpec::radial_stretch(&chart, &[0.0, 0.0], 1.5).is_err());
    assert!(MappingSpec::radial_stretch(&chart, &[0.0, 0.0], 0.0).is_err());
}
