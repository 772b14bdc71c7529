use std::f64::consts::E;
use std::sync::Arc;

use proptest::prelude::*;
use ringmod::criteria::check_fmo;
use ringmod::curves::{curve_length, generate_annulus_family_with_step, line_integral, pushforward, CurveFamily, DiscreteCurve, PointMap};
use ringmod::geometry::{geodesic_distance_on, GeodesicAnnulus, GridDomain, MetricChart};
use ringmod::modulus::{compute_modulus, DensityField, Sampling};
use ringmod::ringmap::{EtaProfile, MappingSpec, QField, QFloor};

fn ring(chart: &MetricChart, r1: f64, r2: f64, count: usize, seed: u64, res: usize) -> (CurveFamily, GridDomain) {
    let ann = GeodesicAnnulus::new(chart, &vec![0.0; chart.dim()], r1, r2).unwrap();
    let (lo, hi) = ann.bounding_box().unwrap();
    let grid = Sampling::default().with_resolution(res).grid_around_box(chart, &lo, &hi).unwrap();
    let fam = generate_annulus_family_with_step(&ann, count, seed, 0.5 * grid.lattice().min_spacing()).unwrap();
    (fam, grid)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn point(r: f64) -> impl Strategy<Value = [f64; 2]> {
    (-r..r, -r..r).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn marched_distance_triangle_inequality(x in point(0.6), y in point(0.6), z in point(0.6), hyperbolic in any::<bool>()) {
        let chart = if hyperbolic { MetricChart::poincare(2) } else { MetricChart::euclidean(2, 1.0) };
        let grid = GridDomain::uniform(&chart, 48).unwrap();
        let h = grid.lattice().min_spacing();
        let slack = 2.0 * h * chart.conformal_factor(&[0.6, 0.6]).unwrap();
        let d = |a: &[f64], b: &[f64]| geodesic_distance_on(&grid, a, b).unwrap();
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + slack);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= slack);
    }

    #[test]
    fn length_is_stable_under_refinement(cx in -0.2..0.2f64, cy in -0.2..0.2f64, rad in 0.1..0.5f64, sweep in 0.5..6.0f64) {
        let chart = MetricChart::poincare(2);
        let pts: Vec<[f64; 2]> = (0..=32)
            .map(|k| {
                let t = sweep * k as f64 / 32.0;
                [cx + rad * t.cos(), cy + rad * t.sin()]
            })
            .collect();
        let c = DiscreteCurve::from_points(&pts).unwrap();
        let a = curve_length(&c, &chart).unwrap();
        let b = curve_length(&c.refined(0.5 * c.max_chart_step()), &chart).unwrap();
        prop_assert!((a / b - 1.0).abs() < 0.01);
    }

    #[test]
    fn volume_is_additive(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -0.5..0.5f64) {
        let grid = GridDomain::uniform(&MetricChart::poincare(2), 48).unwrap();
        let inside = |x: &[f64]| x[0] * x[0] + x[1] * x[1] < 0.64;
        let half = |x: &[f64]| a * x[0] + b * x[1] < c;
        let whole = grid.volume(inside);
        let parts = grid.volume(|x| inside(x) && half(x)) + grid.volume(|x| inside(x) && !half(x));
        prop_assert!((whole - parts).abs() <= 1e-12 * whole);
    }

    #[test]
    fn line_integral_adds_over_concatenation(seed in any::<u64>(), split in 1usize..7) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let chart = MetricChart::euclidean(2, 1.0);
        let grid = Arc::new(GridDomain::uniform(&chart, 16).unwrap());
        let vals: Vec<f64> = (0..grid.num_cells()).map(|_| rng.random::<f64>()).collect();
        let rho = DensityField::new(grid, vals).unwrap();
        let pts: Vec<[f64; 2]> = (0..8).map(|_| [rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)]).collect();
        let c = DiscreteCurve::from_points(&pts).unwrap();
        let (a, b) = (c.subcurve(0, split).unwrap(), c.subcurve(split, 7).unwrap());
        let whole = line_integral(&rho, &c, &chart);
        let sum = line_integral(&rho, &a, &chart) + line_integral(&rho, &b, &chart);
        prop_assert!((whole - sum).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn pushforward_keeps_count_and_order(alpha in 0.2..1.0f64, count in 1usize..40, seed in any::<u64>()) {
        let chart = MetricChart::euclidean(2, 3.0);
        let ann = GeodesicAnnulus::new(&chart, &[0.0, 0.0], 0.5, 2.0).unwrap();
        let fam = generate_annulus_family_with_step(&ann, count, seed, 0.1).unwrap();
        let f = MappingSpec::radial_stretch(&chart, &[0.0, 0.0], alpha).unwrap();
        let img = pushforward(&fam, &f, 0.05).unwrap();
        prop_assert_eq!(img.len(), fam.len());
        for (c, d) in fam.curves().iter().zip(img.curves()) {
            let (a, b) = (f.apply(c.first()).unwrap(), f.apply(c.last()).unwrap());
            prop_assert!(dist(&a, d.first()) < 1e-12);
            prop_assert!(dist(&b, d.last()) < 1e-12);
            prop_assert!(d.max_chart_step() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn constant_weight_has_no_oscillation(q in 0.0..50.0f64) {
        let grid = GridDomain::uniform(&MetricChart::euclidean(2, 1.0), 32).unwrap();
        let r = check_fmo(&QField::constant(q).unwrap(), &[0.0, 0.0], &grid, &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        prop_assert!(r.oscillations.iter().all(|m| m.abs() <= 1e-12 * q.max(1.0)));
    }

    #[test]
    fn random_profiles_are_normalized(seed in any::<u64>(), r1 in 0.1..1.0f64, w in 0.1..3.0f64) {
        let eta = EtaProfile::random_steps(r1, r1 + w, seed).unwrap();
        prop_assert!((eta.normalization() - 1.0).abs() < 1e-9);
        prop_assert!(eta.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn floored_weight_never_drops_below_floor(v in -5.0..5.0f64) {
        let q = QField::from_fn("v", move |_| v).with_floor(QFloor::One);
        prop_assert!(q.eval(&[0.0, 0.0]) >= 1.0);
        prop_assert!(QField::from_fn("v", move |_| v).eval(&[0.0, 0.0]) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn modulus_is_monotone_and_subadditive(seed in any::<u64>(), cut in 8usize..56) {
        let chart = MetricChart::euclidean(2, 3.0);
        let (fam, grid) = ring(&chart, 1.0, E, 64, seed, 32);
        let tol = 2e-4;
        let all: Vec<usize> = (0..fam.len()).collect();
        let (left, right) = all.split_at(cut);
        let full = compute_modulus(&fam, 2.0, &grid).unwrap().value;
        let a = compute_modulus(&fam.subset(left), 2.0, &grid).unwrap().value;
        let b = compute_modulus(&fam.subset(right), 2.0, &grid).unwrap().value;
        prop_assert!(a <= full * (1.0 + tol));
        prop_assert!(b <= full * (1.0 + tol));
        prop_assert!(full <= (a + b) * (1.0 + tol));
    }

    #[test]
    fn doubling_the_sample_never_lowers_the_estimate(seed in any::<u64>(), p in 1.5..3.0f64) {
        let chart = MetricChart::euclidean(2, 3.0);
        let (small, grid) = ring(&chart, 1.0, E, 64, seed, 32);
        let (big, _) = ring(&chart, 1.0, E, 128, seed, 32);
        let a = compute_modulus(&small, p, &grid).unwrap().value;
        let b = compute_modulus(&big, p, &grid).unwrap().value;
        prop_assert!(b >= a * (1.0 - 2e-4), "{} < {}", b, a);
    }

    #[test]
    fn euclidean_scaling_law(s in 0.5..2.0f64, p in 1.5..3.0f64) {
        let (f1, g1) = ring(&MetricChart::euclidean(2, 3.0), 1.0, E, 128, 1, 48);
        let (f2, g2) = ring(&MetricChart::euclidean(2, 3.0 * s), s, s * E, 128, 1, 48);
        let m1 = compute_modulus(&f1, p, &g1).unwrap().value;
        let m2 = compute_modulus(&f2, p, &g2).unwrap().value;
        prop_assert!((m2 / m1 / s.powf(2.0 - p) - 1.0).abs() < 0.05);
    }

    #[test]
    fn solved_density_is_admissible(seed in any::<u64>(), p in 1.5..3.0f64) {
        let chart = MetricChart::euclidean(2, 3.0);
        let (fam, grid) = ring(&chart, 0.5, 2.0, 96, seed, 40);
        let r = compute_modulus(&fam, p, &grid).unwrap();
        let min = fam.curves().iter().map(|c| line_integral(&r.density, c, &chart)).fold(f64::INFINITY, f64::min);
        prop_assert!(min >= 1.0 - 1e-6, "{}", min);
    }
}
