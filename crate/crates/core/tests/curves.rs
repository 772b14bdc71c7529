use std::f64::consts::E;
use std::sync::Arc;

use ringmod::curves::{
    curve_length, generate_annulus_family, line_integral, pushforward, read_family_csv, write_family_csv,
    DiscreteCurve, Provenance,
};
use ringmod::geometry::{GeodesicAnnulus, GridDomain, MetricChart};
use ringmod::modulus::DensityField;
use ringmod::ringmap::MappingSpec;
use ringmod::Error;

#[test]
fn line_integrals() {
    let chart = MetricChart::euclidean(2, 6.0);
    let grid = Arc::new(GridDomain::uniform(&chart, 256).unwrap());
    let seg = DiscreteCurve::from_points(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
    assert_eq!(line_integral(&DensityField::zero(grid.clone()), &seg, &chart), 0.0);
    let one = line_integral(&DensityField::constant(grid.clone(), 1.0).unwrap(), &seg, &chart);
    assert!((one - 5.0).abs() < 1e-9);
    let rho = DensityField::from_fn(grid, |x| 1.0 / x[0].hypot(x[1])).unwrap();
    let radial = DiscreteCurve::segment(&[1.0, 0.0], &[E, 0.0], 0.01).unwrap();
    let v = line_integral(&rho, &radial, &chart);
    assert!((v - 1.0).abs() < 0.01, "{v}");
}

#[test]
fn generated_families() {
    let chart = MetricChart::euclidean(2, 3.0);
    let ann = GeodesicAnnulus::new(&chart, &[0.0, 0.0], 1.0, 2.0).unwrap();
    let f = generate_annulus_family(&ann, 8, 5).unwrap();
    assert_eq!(f.len(), 8);
    for c in f.curves() {
        assert!((c.first()[0].hypot(c.first()[1]) - 1.0).abs() < 1e-9);
        assert!((c.last()[0].hypot(c.last()[1]) - 2.0).abs() < 1e-9);
        assert!(c.vertices().all(|v| ann.contains_closed(v, 1e-9)));
    }
    assert_eq!(generate_annulus_family(&ann, 8, 5).unwrap().curves(), f.curves());
    assert!(generate_annulus_family(&ann, 0, 5).is_err());

    let mut buf = Vec::new();
    write_family_csv(&f, &mut buf).unwrap();
    let back = read_family_csv(buf.as_slice()).unwrap();
    assert_eq!(back.curves(), f.curves());
    assert!(back.provenance().iter().all(|p| *p == Provenance::Imported));
}

#[test]
fn pushforward_under_stretch() {
    let chart = MetricChart::euclidean(2, 8.0);
    let x0 = [0.0, 0.0];
    let ann = GeodesicAnnulus::new(&chart, &x0, 1.0, E * E).unwrap();
    let fam = generate_annulus_family(&ann, 8, 1).unwrap();
    let st = MappingSpec::radial_stretch(&chart, &x0, 0.5).unwrap();
    let img = pushforward(&fam, &st, 0.05).unwrap();
    assert_eq!(img.len(), fam.len());
    let c = &img.curves()[0];
    assert!((c.first()[0].hypot(c.first()[1]) - 1.0).abs() < 1e-9);
    assert!((c.last()[0].hypot(c.last()[1]) - E).abs() < 1e-9);
    assert!(img.provenance().iter().all(|p| *p == Provenance::Pushforward));
    assert!((curve_length(c, &chart).unwrap() - (E - 1.0)).abs() < 1e-9);

    let id = pushforward(&fam, &MappingSpec::identity(&chart, &x0).unwrap(), 1e9).unwrap();
    assert_eq!(id.curves(), fam.curves());

    let small = MetricChart::euclidean(2, 1.0);
    let outside = MappingSpec::identity(&small, &x0).unwrap();
    assert!(matches!(pushforward(&fam, &outside, 0.05), Err(Error::Domain(_))));
}
