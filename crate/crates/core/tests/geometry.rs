use std::f64::consts::PI;

use ringmod::geometry::{geodesic_distance, geodesic_distance_on, sphere_quadrature, GridDomain, MetricChart};

#[test]
fn distances() {
    let e = MetricChart::euclidean(2, 2.0);
    assert!((geodesic_distance(&[0.0, 0.0], &[1.0, 0.0], &e).unwrap() - 1.0).abs() < 1e-12);
    let grid = GridDomain::uniform(&e, 128).unwrap();
    let marched = geodesic_distance_on(&grid, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert!((marched - 1.0).abs() < 0.01, "{marched}");
    assert_eq!(geodesic_distance_on(&grid, &[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);

    let disk = MetricChart::poincare(2);
    let d = geodesic_distance(&[0.0, 0.0], &[0.5, 0.0], &disk).unwrap();
    assert!((d - 3f64.ln()).abs() < 1e-9);
    let grid = GridDomain::uniform(&disk, 256).unwrap();
    let marched = geodesic_distance_on(&grid, &[0.0, 0.0], &[0.5, 0.0]).unwrap();
    assert!((marched / 3f64.ln() - 1.0).abs() < 0.01, "{marched}");
}

#[test]
fn volumes() {
    let e = MetricChart::euclidean(2, 1.0);
    let grid = GridDomain::uniform(&e, 256).unwrap();
    let disk = grid.volume(|x| x[0] * x[0] + x[1] * x[1] < 1.0);
    assert!((disk - PI).abs() < 0.01 * PI);
    assert_eq!(grid.volume(|_| false), 0.0);

    let p = MetricChart::poincare(2);
    let grid = GridDomain::around(&p, &[0.0, 0.0], 0.5, 256).unwrap();
    let ball = grid.volume(|x| x[0] * x[0] + x[1] * x[1] < 0.25);
    assert!((ball / (4.0 * PI / 3.0) - 1.0).abs() < 0.01, "{ball}");
}

#[test]
fn sphere_integrals() {
    let e = MetricChart::euclidean(2, 3.0);
    let x0 = [0.0, 0.0];
    assert!((sphere_quadrature(&x0, 2.0, |_| 1.0, &e).unwrap() - 4.0 * PI).abs() < 1e-9);
    let half = sphere_quadrature(&x0, 1.0, |x| if x[1] > 0.0 { 1.0 } else { 0.0 }, &e).unwrap();
    assert!((half - PI).abs() < 0.02, "{half}");
    let e3 = MetricChart::euclidean(3, 3.0);
    let s2 = sphere_quadrature(&[0.0; 3], 1.0, |_| 1.0, &e3).unwrap();
    assert!((s2 - 4.0 * PI).abs() < 1e-6);
    let guarded = MetricChart::euclidean(2, 3.0).with_patch_radius(1.0);
    assert!(sphere_quadrature(&x0, 2.0, |_| 1.0, &guarded).is_err());
}
