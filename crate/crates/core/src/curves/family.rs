use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::curves::DiscreteCurve;
use crate::error::{ensure, Error, Result};
use crate::geometry::{default_resolution, GeodesicAnnulus, MetricChart};
use crate::numeric::{dist, norm};

/// How a curve of a family was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    RadialBundle,
    PerturbedRadial,
    RandomConnecting,
    Pushforward,
    /// Subcurve of another family's curve.
    Truncated,
    /// Joins two continua.
    Connecting,
    /// Read from a file.
    Imported,
}

/// A finite, immutable sample of a curve family.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    dim: usize,
    curves: Vec<DiscreteCurve>,
    provenance: Vec<Provenance>,
    seed: u64,
    /// Closed region known to contain every curve, when there is one.
    support: Option<GeodesicAnnulus>,
}

impl CurveFamily {
    pub fn new(dim: usize, curves: Vec<DiscreteCurve>, provenance: Vec<Provenance>, seed: u64) -> Result<Self> {
        ensure!(
            curves.len() == provenance.len(),
            Precondition,
            "one provenance tag per curve required"
        );
        ensure!(
            curves.iter().all(|c| c.dim() == dim),
            Precondition,
            "curves differ from family dimension {dim}"
        );
        Ok(CurveFamily {
            dim,
            curves,
            provenance,
            seed,
            support: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        CurveFamily {
            dim,
            curves: Vec::new(),
            provenance: Vec::new(),
            seed: 0,
            support: None,
        }
    }

    pub fn with_support(mut self, support: Option<GeodesicAnnulus>) -> Self {
        self.support = support;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.curves.len()
    }
    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
    pub fn curves(&self) -> &[DiscreteCurve] {
        &self.curves
    }
    pub fn curve(&self, i: usize) -> &DiscreteCurve {
        &self.curves[i]
    }
    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn support(&self) -> Option<&GeodesicAnnulus> {
        self.support.as_ref()
    }

    /// The curves at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        CurveFamily {
            dim: self.dim,
            curves: indices.iter().map(|&i| self.curves[i].clone()).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
            seed: self.seed,
            support: self.support.clone(),
        }
    }

    /// Curves of `self` followed by those of `other`. The support is kept only
    /// if both families declare the same annulus.
    pub fn union(&self, other: &Self) -> Result<Self> {
        ensure!(self.dim == other.dim, Precondition, "families differ in dimension");
        let mut curves = self.curves.clone();
        curves.extend_from_slice(&other.curves);
        let mut provenance = self.provenance.clone();
        provenance.extend_from_slice(&other.provenance);
        let support = match (&self.support, &other.support) {
            (Some(a), Some(b))
                if a.center() == b.center() && a.r1() == b.r1() && a.r2() == b.r2() =>
            {
                Some(a.clone())
            }
            _ => None,
        };
        Ok(CurveFamily {
            dim: self.dim,
            curves,
            provenance,
            seed: self.seed,
            support,
        })
    }

    /// Euclidean scaling about `center` (chart must be flat for this to be meaningful).
    pub fn scaled(&self, center: &[f64], s: f64, support: Option<GeodesicAnnulus>) -> Result<Self> {
        let curves = self
            .curves
            .iter()
            .map(|c| c.map_points(|x| x.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(CurveFamily {
            dim: self.dim,
            curves,
            provenance: self.provenance.clone(),
            seed: self.seed,
            support,
        })
    }
}

/// Family sizes: three quarters radial, then perturbed radials, then random walks.
fn split(count: usize) -> (usize, usize, usize) {
    let radial = count - count / 4;
    let perturbed = (count / 4) / 2;
    (radial, perturbed, count - radial - perturbed)
}

const STREAM_PERTURBED: u64 = 1 << 32;
const STREAM_RANDOM: u64 = 2 << 32;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Default polyline step: half a cell of the default-resolution grid over the
/// annulus' bounding box.
pub fn default_step(annulus: &GeodesicAnnulus) -> Result<f64> {
    let (lo, hi) = annulus.bounding_box()?;
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    Ok(0.5 * extent / default_resolution(annulus.dim()) as f64)
}

/// `count` curves joining `S(x0, r1)` to `S(x0, r2)` inside the closed
/// annulus, with the default step.
pub fn generate_annulus_family(annulus: &GeodesicAnnulus, count: usize, seed: u64) -> Result<CurveFamily> {
    let step = default_step(annulus)?;
    generate_annulus_family_with_step(annulus, count, seed, step)
}

/// As [`generate_annulus_family`] with an explicit chart-coordinate step.
///
/// Curve `j` of each kind depends only on `(seed, kind, j)`, and radial
/// directions form a nested sequence, so doubling `count` (in multiples of 8)
/// yields a superset of the smaller family.
pub fn generate_annulus_family_with_step(
    annulus: &GeodesicAnnulus,
    count: usize,
    seed: u64,
    max_step: f64,
) -> Result<CurveFamily> {
    ensure!(count >= 1, Precondition, "curve count must be at least 1");
    ensure!(max_step > 0.0, Precondition, "step must be positive");
    let n = annulus.dim();
    let (radial, perturbed, random) = split(count);
    let kinds: Vec<(Provenance, usize)> = (0..radial)
        .map(|j| (Provenance::RadialBundle, j))
        .chain((0..perturbed).map(|j| (Provenance::PerturbedRadial, j)))
        .chain((0..random).map(|j| (Provenance::RandomConnecting, j)))
        .collect();
    let curves = kinds
        .par_iter()
        .map(|&(kind, j)| match kind {
            Provenance::RadialBundle => radial_curve(annulus, &bundle_direction(n, j, radial), max_step),
            Provenance::PerturbedRadial => perturbed_curve(annulus, &mut rng_for(seed, STREAM_PERTURBED + j as u64), max_step),
            _ => random_walk(annulus, &mut rng_for(seed, STREAM_RANDOM + j as u64), max_step),
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = kinds.iter().map(|k| k.0).collect();
    Ok(CurveFamily::new(n, curves, provenance, seed)?.with_support(Some(annulus.clone())))
}

/// Direction `j` of the radial bundle. In the plane the bundle is
/// equispaced on the circle; above that it is a Halton sequence mapped to the
/// sphere (a prefix of the same sequence for every count).
fn bundle_direction(n: usize, j: usize, total: usize) -> Vec<f64> {
    if n == 2 {
        let t = std::f64::consts::TAU * j as f64 / total as f64;
        return vec![t.cos(), t.sin()];
    }
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let u: Vec<f64> = (0..n - 1).map(|k| halton(j as u64 + 1, PRIMES[k])).collect();
    sphere_point(n, &u)
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Maps `[0,1]^{n-1}` to `S^{n-1}` through hyperspherical angles with
/// `cos θ_k` uniform; equal-area for n = 3.
fn sphere_point(n: usize, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut s = 1.0;
    for k in 0..n - 2 {
        let c = 1.0 - 2.0 * u[k];
        out[k] = s * c;
        s *= (1.0 - c * c).max(0.0).sqrt();
    }
    let phi = std::f64::consts::TAU * u[n - 2];
    out[n - 2] = s * phi.cos();
    out[n - 1] = s * phi.sin();
    out
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let l = norm(&v);
        if l > 1e-12 {
            return v.into_iter().map(|x| x / l).collect();
        }
    }
}

fn point(annulus: &GeodesicAnnulus, dir: &[f64], r: f64) -> Result<Vec<f64>> {
    annulus
        .point_at(dir, r)
        .ok_or_else(|| Error::Domain(format!("no point at radius {r} in direction {dir:?}")))
}

/// Samples `(direction(s), radius(s))` for `s ∈ [0, 1]`, then refines until
/// every chart step is at most `max_step`.
fn polar_curve<F>(annulus: &GeodesicAnnulus, max_step: f64, f: F) -> Result<DiscreteCurve>
where
    F: Fn(f64) -> (Vec<f64>, f64),
{
    let eval = |s: f64| -> Result<Vec<f64>> {
        let (d, r) = f(s);
        point(annulus, &d, r)
    };
    let a = eval(0.0)?;
    let b = eval(1.0)?;
    let mut pts = vec![(0.0, a)];
    let mut stack = vec![(1.0, b)];
    // depth-first subdivision on the parameter
    while let Some((s1, p1)) = stack.pop() {
        let (s0, p0) = pts.last().expect("non-empty").clone();
        if dist(&p0, &p1) <= max_step || s1 - s0 < 1e-9 {
            pts.push((s1, p1));
        } else {
            let sm = 0.5 * (s0 + s1);
            let pm = eval(sm)?;
            stack.push((s1, p1));
            stack.push((sm, pm));
        }
    }
    let points: Vec<Vec<f64>> = pts.into_iter().map(|(_, p)| p).collect();
    DiscreteCurve::from_points(&points)
}

fn radial_curve(annulus: &GeodesicAnnulus, dir: &[f64], max_step: f64) -> Result<DiscreteCurve> {
    let (r1, r2) = (annulus.r1(), annulus.r2());
    polar_curve(annulus, max_step, |s| (dir.to_vec(), r1 + s * (r2 - r1)))
}

fn perturbed_curve(annulus: &GeodesicAnnulus, rng: &mut ChaCha8Rng, max_step: f64) -> Result<DiscreteCurve> {
    let n = annulus.dim();
    let (r1, r2) = (annulus.r1(), annulus.r2());
    let u = random_unit(n, rng);
    let mut v = random_unit(n, rng);
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= dot * y);
    let l = norm(&v).max(1e-12);
    v.iter_mut().for_each(|x| *x /= l);
    let amp = rng.random_range(0.05..0.4);
    let waves = rng.random_range(1..=3) as f64;
    polar_curve(annulus, max_step, move |s| {
        let w = amp * (std::f64::consts::PI * waves * s).sin();
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + w * b).collect();
        let l = norm(&d);
        (d.into_iter().map(|x| x / l).collect(), r1 + s * (r2 - r1))
    })
}

/// Straight chart segments between random waypoints, each vertex projected
/// radially into the closed annulus, endpoints snapped to the two spheres.
fn random_walk(annulus: &GeodesicAnnulus, rng: &mut ChaCha8Rng, max_step: f64) -> Result<DiscreteCurve> {
    let n = annulus.dim();
    let (r1, r2) = (annulus.r1(), annulus.r2());
    let c = annulus.center().to_vec();
    let legs = rng.random_range(3..=7);
    let mut dir = random_unit(n, rng);
    let mut way = vec![point(annulus, &dir, r1)?];
    for k in 1..=legs {
        let r = if k == legs { r2 } else { rng.random_range(r1..=r2) };
        let jitter = random_unit(n, rng);
        let scale = rng.random_range(0.0..0.6);
        for i in 0..n {
            dir[i] += scale * jitter[i];
        }
        let l = norm(&dir);
        dir.iter_mut().for_each(|x| *x /= l);
        way.push(point(annulus, &dir, r)?);
    }
    let mut coords = Vec::new();
    for w in way.windows(2) {
        let seg = DiscreteCurve::segment(&w[0], &w[1], max_step)?;
        let skip = if coords.is_empty() { 0 } else { 1 };
        for v in seg.vertices().skip(skip) {
            coords.push(v.to_vec());
        }
    }
    let last = coords.len() - 1;
    for (i, x) in coords.iter_mut().enumerate() {
        if i == 0 || i == last {
            continue;
        }
        let d = annulus.radius_of(x);
        if !(d >= r1 && d <= r2) {
            let mut u: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
            let l = norm(&u);
            if l < 1e-300 {
                continue;
            }
            u.iter_mut().for_each(|v| *v /= l);
            let target = if d.is_finite() { d.clamp(r1, r2) } else { r2 };
            *x = point(annulus, &u, target)?;
        }
    }
    Ok(DiscreteCurve::from_points(&coords)?.refined(max_step))
}

/// Point-to-point map used to push curve families forward.
pub trait PointMap: Sync {
    fn dim(&self) -> usize;
    /// Image of `x`; a domain error where the map is undefined.
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Region containing the image of the closed annulus, when known.
    fn image_support(&self, _annulus: &GeodesicAnnulus) -> Option<GeodesicAnnulus> {
        None
    }
}

/// Vertexwise image of every curve, with segments subdivided in the source
/// parameter until each image step is at most `max_step`.
pub fn pushforward<M: PointMap + ?Sized>(family: &CurveFamily, f: &M, max_step: f64) -> Result<CurveFamily> {
    ensure!(max_step > 0.0, Precondition, "step must be positive");
    ensure!(
        f.dim() == family.dim(),
        Precondition,
        "map dimension {} does not match family dimension {}",
        f.dim(),
        family.dim()
    );
    let curves = family
        .curves()
        .par_iter()
        .map(|c| push_curve(c, f, max_step))
        .collect::<Result<Vec<_>>>()?;
    let support = family.support().and_then(|a| f.image_support(a));
    Ok(CurveFamily {
        dim: family.dim(),
        provenance: vec![Provenance::Pushforward; curves.len()],
        curves,
        seed: family.seed(),
        support,
    })
}

fn push_curve<M: PointMap + ?Sized>(c: &DiscreteCurve, f: &M, max_step: f64) -> Result<DiscreteCurve> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(c.num_vertices());
    let images = c.vertices().map(|v| f.apply(v)).collect::<Result<Vec<_>>>()?;
    out.push(images[0].clone());
    for i in 0..c.num_vertices() - 1 {
        let (a, b) = (c.vertex(i), c.vertex(i + 1));
        let mut stack = vec![(1.0, images[i + 1].clone())];
        let mut s0 = 0.0;
        while let Some((s1, p1)) = stack.pop() {
            let p0 = out.last().expect("non-empty");
            if dist(p0, &p1) <= max_step || s1 - s0 < 1e-12 {
                out.push(p1);
                s0 = s1;
            } else {
                let sm = 0.5 * (s0 + s1);
                let x: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + sm * (v - u)).collect();
                let pm = f.apply(&x)?;
                stack.push((s1, p1));
                stack.push((sm, pm));
            }
        }
    }
    DiscreteCurve::from_points(&out)
}

/// For each curve, the prefix up to the first vertex at distance `>= r_cut`
/// from the annulus center. Every truncated curve is a vertex range of the
/// original starting at vertex 0.
pub fn truncate_radially(family: &CurveFamily, annulus: &GeodesicAnnulus, r_cut: f64) -> Result<CurveFamily> {
    let curves = family
        .curves()
        .iter()
        .map(|c| {
            let end = c
                .vertices()
                .position(|v| annulus.radius_of(v) >= r_cut)
                .unwrap_or(c.num_vertices() - 1)
                .max(1);
            c.subcurve(0, end)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveFamily {
        dim: family.dim(),
        provenance: vec![Provenance::Truncated; curves.len()],
        curves,
        seed: family.seed(),
        support: None,
    })
}

/// Curves joining two polyline continua: straight segments between evenly
/// spread point pairs plus seeded bent arcs, all inside `chart`.
pub fn generate_connecting_family(
    e: &DiscreteCurve,
    f: &DiscreteCurve,
    count: usize,
    seed: u64,
    max_step: f64,
    chart: &MetricChart,
) -> Result<CurveFamily> {
    ensure!(count >= 1, Precondition, "curve count must be at least 1");
    let n = e.dim();
    let straight = count - count / 4;
    let side = (straight as f64).sqrt().ceil() as usize;
    let mut curves = Vec::with_capacity(count);
    let mut prov = Vec::with_capacity(count);
    for j in 0..straight {
        let (s, t) = ((j / side) as f64 / (side.max(2) - 1) as f64, (j % side) as f64 / (side.max(2) - 1) as f64);
        let a = point_on(e, s.min(1.0));
        let b = point_on(f, t.min(1.0));
        curves.push(DiscreteCurve::segment(&a, &b, max_step)?);
        prov.push(Provenance::Connecting);
    }
    for j in 0..count - straight {
        let mut rng = rng_for(seed, STREAM_RANDOM + j as u64);
        let a = point_on(e, rng.random_range(0.0..=1.0));
        let b = point_on(f, rng.random_range(0.0..=1.0));
        let bend = random_unit(n, &mut rng);
        let amp = rng.random_range(0.0..0.5) * dist(&a, &b);
        let ctrl: Vec<f64> = (0..n).map(|k| 0.5 * (a[k] + b[k]) + amp * bend[k]).collect();
        let pieces = ((2.0 * dist(&a, &b) / max_step).ceil() as usize).max(2);
        let pts: Vec<Vec<f64>> = (0..=pieces)
            .map(|i| {
                let t = i as f64 / pieces as f64;
                (0..n)
                    .map(|k| (1.0 - t) * (1.0 - t) * a[k] + 2.0 * t * (1.0 - t) * ctrl[k] + t * t * b[k])
                    .collect()
            })
            .collect();
        if pts.iter().all(|p| chart.contains(p)) {
            curves.push(DiscreteCurve::from_points(&pts)?.refined(max_step));
        } else {
            curves.push(DiscreteCurve::segment(&a, &b, max_step)?);
        }
        prov.push(Provenance::Connecting);
    }
    CurveFamily::new(n, curves, prov, seed)
}

/// Point at arc fraction `s` along the polyline (chart arclength).
pub fn point_on(c: &DiscreteCurve, s: f64) -> Vec<f64> {
    let total: f64 = c.chart_steps().iter().sum();
    let mut target = s.clamp(0.0, 1.0) * total;
    for (i, &l) in c.chart_steps().iter().enumerate() {
        if target <= l || i + 1 == c.chart_steps().len() {
            let t = if l > 0.0 { (target / l).min(1.0) } else { 0.0 };
            let (a, b) = (c.vertex(i), c.vertex(i + 1));
            return a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
        }
        target -= l;
    }
    c.last().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn ring() -> GeodesicAnnulus {
        GeodesicAnnulus::new(&MetricChart::euclidean(2, 3.0), &[0.0, 0.0], 1.0, E).unwrap()
    }

    #[test]
    fn endpoints_lie_on_the_spheres() {
        let a = ring();
        let fam = generate_annulus_family_with_step(&a, 8, 7, 0.02).unwrap();
        assert_eq!(fam.len(), 8);
        for c in fam.curves() {
            assert!((norm(c.first()) - 1.0).abs() < 1e-9);
            assert!((norm(c.last()) - E).abs() < 1e-9);
            assert!(c.vertices().all(|v| a.contains_closed(v, 1e-9)));
            assert!(c.max_chart_step() <= 0.02 + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_family() {
        let a = ring();
        let f1 = generate_annulus_family_with_step(&a, 16, 42, 0.05).unwrap();
        let f2 = generate_annulus_family_with_step(&a, 16, 42, 0.05).unwrap();
        let f3 = generate_annulus_family_with_step(&a, 16, 43, 0.05).unwrap();
        assert_eq!(f1.curves(), f2.curves());
        assert_ne!(f1.curves(), f3.curves());
    }

    #[test]
    fn doubling_count_nests_families() {
        let a = ring();
        let small = generate_annulus_family_with_step(&a, 64, 3, 0.05).unwrap();
        let big = generate_annulus_family_with_step(&a, 128, 3, 0.05).unwrap();
        for c in small.curves() {
            assert!(big.curves().contains(c));
        }
    }

    #[test]
    fn zero_count_is_an_error() {
        assert!(generate_annulus_family(&ring(), 0, 1).is_err());
    }

    struct Stretch(f64);
    impl PointMap for Stretch {
        fn dim(&self) -> usize {
            2
        }
        fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
            let r = norm(x);
            if r > 100.0 {
                return Err(Error::Domain("outside".into()));
            }
            let s = r.powf(self.0 - 1.0);
            Ok(x.iter().map(|v| v * s).collect())
        }
    }

    #[test]
    fn pushforward_of_radial_segment_under_stretch() {
        let seg = DiscreteCurve::segment(&[1.0, 0.0], &[E * E, 0.0], 0.1).unwrap();
        let fam = CurveFamily::new(2, vec![seg.clone(), seg], vec![Provenance::RadialBundle; 2], 0).unwrap();
        let img = pushforward(&fam, &Stretch(0.5), 0.01).unwrap();
        assert_eq!(img.len(), 2);
        for c in img.curves() {
            assert!((c.first()[0] - 1.0).abs() < 1e-12);
            assert!((c.last()[0] - E).abs() < 1e-12);
            assert!(c.max_chart_step() <= 0.01);
        }
        let far = DiscreteCurve::segment(&[1.0, 0.0], &[200.0, 0.0], 10.0).unwrap();
        let bad = CurveFamily::new(2, vec![far], vec![Provenance::Imported], 0).unwrap();
        assert!(pushforward(&bad, &Stretch(0.5), 0.1).is_err());
    }
}
