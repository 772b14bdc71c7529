use std::f64::consts::{E, PI};

use ringmod::condenser::{capacity, check_lemma1_bound, Condenser};
use ringmod::criteria::PsiFamily;
use ringmod::geometry::{GridDomain, MetricChart};
use ringmod::modulus::Sampling;
use ringmod::numeric::integrate_log;
use ringmod::ringmap::{MappingSpec, QField};
use ringmod::Error;

fn cap_grid(chart: &MetricChart, eps0: f64, res: usize) -> GridDomain {
    let n = chart.dim();
    Sampling::default()
        .with_resolution(res)
        .grid_around_box(chart, &vec![-eps0; n], &vec![eps0; n])
        .unwrap()
}

#[test]
fn planar_capacity_matches_closed_form() {
    let chart = MetricChart::euclidean(2, 1.0);
    let (eps, eps0) = (1.0 / E, 1.0);
    let grid = cap_grid(&chart, eps0, 256);
    let cond = Condenser::new(&chart, &[0.0, 0.0], eps, eps0).unwrap();
    for p in [1.5, 2.0] {
        let c = capacity(&cond, p, &grid, 4096, 1).unwrap().value;
        let exact = 2.0 * PI * integrate_log(eps, eps0, 64, |t| t.powf(-1.0 / (p - 1.0))).powf(1.0 - p);
        let ratio = c / exact;
        assert!((0.95..=1.0 + 1e-3).contains(&ratio), "p = {p}: {c} vs {exact}");
    }
}

#[test]
fn capacity_grows_as_plates_approach() {
    let chart = MetricChart::euclidean(2, 1.0);
    let grid = cap_grid(&chart, 1.0, 128);
    let cond = Condenser::new(&chart, &[0.0, 0.0], 0.2, 1.0).unwrap();
    let mut last = 0.0;
    for eps in [0.2, 0.4, 0.6, 0.8] {
        let c = capacity(&cond.with_eps(eps).unwrap(), 2.0, &grid, 1024, 1).unwrap().value;
        assert!(c > last, "capacity {c} not above {last} at ε = {eps}");
        last = c;
    }
}

#[test]
fn narrow_gap_gives_large_capacity() {
    let chart = MetricChart::euclidean(2, 2.5);
    let grid = cap_grid(&chart, 2.0, 128);
    let h = grid.lattice().min_spacing();
    let thin = Condenser::new(&chart, &[0.0, 0.0], 1.0, 1.0 + 2.0 * h).unwrap();
    let wide = Condenser::new(&chart, &[0.0, 0.0], 1.0, 2.0).unwrap();
    let a = capacity(&thin, 2.0, &grid, 2048, 1).unwrap().value;
    let b = capacity(&wide, 2.0, &grid, 2048, 1).unwrap().value;
    assert!(a >= 10.0 * b, "{a} vs {b}");
}

#[test]
fn invalid_inputs() {
    let chart = MetricChart::euclidean(2, 1.0);
    assert!(Condenser::new(&chart, &[0.0, 0.0], 0.5, 0.4).is_err());
    let grid = cap_grid(&chart, 1.0, 32);
    let cond = Condenser::new(&chart, &[0.0, 0.0], 0.5, 0.51).unwrap();
    assert!(capacity(&cond, 2.0, &grid, 64, 1).is_err(), "gap below one cell");
    let ok = Condenser::new(&chart, &[0.0, 0.0], 0.25, 1.0).unwrap();
    assert!(capacity(&ok, 2.0, &grid, 0, 1).is_err());
}

#[test]
fn lemma_bound_for_the_identity() {
    let chart = MetricChart::euclidean(2, 1.0);
    let x0 = [0.0, 0.0];
    let cond = Condenser::new(&chart, &x0, 0.01, 0.1).unwrap();
    let psi = PsiFamily::log_power(2, 2.0);
    let s = Sampling::new(2048, 1).with_resolution(192);
    let r = check_lemma1_bound(
        &MappingSpec::identity(&chart, &x0).unwrap(),
        &cond,
        &QField::constant(1.0).unwrap(),
        2.0,
        &psi,
        &[1e-2, 1e-3],
        &s,
    )
    .unwrap();
    assert!(r.pass && !r.degenerate_q);
    for row in &r.rows {
        assert!((row.rhs * row.i.powi(2) - row.f).abs() <= 1e-9 * row.f);
    }
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
}

#[test]
fn zero_weight_is_degenerate() {
    let chart = MetricChart::euclidean(2, 1.0);
    let x0 = [0.0, 0.0];
    let cond = Condenser::new(&chart, &x0, 0.01, 0.1).unwrap();
    let r = check_lemma1_bound(
        &MappingSpec::identity(&chart, &x0).unwrap(),
        &cond,
        &QField::constant(0.0).unwrap(),
        2.0,
        &PsiFamily::log_power(2, 2.0),
        &[1e-2],
        &Sampling::new(512, 1).with_resolution(96),
    )
    .unwrap();
    assert!(r.degenerate_q && !r.pass);
}

#[test]
fn unnormalizable_psi_is_an_error() {
    let psi = PsiFamily::reciprocal(2, 2.0);
    assert!(psi.normalizer(0.01, 0.1).is_ok());
    assert!(matches!(psi.normalizer(0.1, 0.1), Err(Error::PsiNormalization(_)) | Err(Error::Precondition(_))));
}
