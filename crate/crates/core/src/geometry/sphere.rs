use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{ensure, Error, Result};
use crate::geometry::{distance_field, DistanceField, GridDomain, MetricChart};
use crate::numeric::{pairwise_sum, GaussLegendre};

/// Distance to a fixed center, closed form when the chart has one.
#[derive(Clone, Debug)]
pub enum CenteredDistance {
    Analytic { chart: MetricChart, center: Vec<f64> },
    Field(Arc<DistanceField>),
}

impl CenteredDistance {
    pub fn new(chart: &MetricChart, center: &[f64]) -> Result<Self> {
        chart.check_point(center)?;
        if chart.has_analytic_distance() {
            return Ok(CenteredDistance::Analytic {
                chart: chart.clone(),
                center: center.to_vec(),
            });
        }
        let grid = GridDomain::with_default_resolution(chart)?;
        Self::on_grid(&grid, center)
    }

    /// Always marches on `grid`, even when a closed form exists.
    pub fn on_grid(grid: &GridDomain, center: &[f64]) -> Result<Self> {
        Ok(CenteredDistance::Field(Arc::new(distance_field(grid, center)?)))
    }

    pub fn center(&self) -> &[f64] {
        match self {
            CenteredDistance::Analytic { center, .. } => center,
            CenteredDistance::Field(f) => f.source(),
        }
    }

    /// `d(x, center)`; NaN outside the chart.
    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            CenteredDistance::Analytic { chart, center } => {
                if !chart.contains(x) {
                    return f64::NAN;
                }
                chart.analytic_distance(center, x).unwrap_or(f64::NAN)
            }
            CenteredDistance::Field(f) => f.at(x),
        }
    }

    fn is_flat(&self) -> bool {
        matches!(self, CenteredDistance::Analytic { chart, .. } if chart.is_euclidean())
    }

    /// Point of the geodesic sphere `S(center, r)` on the chart ray in
    /// direction `dir` (Euclidean unit vector), or `None` if the ray leaves
    /// the chart first.
    pub fn point_at(&self, dir: &[f64], r: f64) -> Option<Vec<f64>> {
        let c = self.center();
        let ray = |t: f64| -> Vec<f64> { c.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
        if let CenteredDistance::Analytic { chart, .. } = self {
            if chart.is_euclidean() {
                let x = ray(r);
                return chart.contains(&x).then_some(x);
            }
        }
        if r == 0.0 {
            return Some(c.to_vec());
        }
        // bracket, then bisect on the monotone radial profile
        let mut lo = 0.0;
        let mut hi = r.min(1.0) * 0.5;
        loop {
            let d = self.at(&ray(hi));
            if !d.is_finite() {
                // walk back to the chart boundary before giving up
                let mut a = lo;
                let mut b = hi;
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if self.at(&ray(m)).is_finite() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                if a <= lo || self.at(&ray(a)) < r {
                    return None;
                }
                hi = a;
                break;
            }
            if d >= r {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return None;
            }
        }
        for _ in 0..64 {
            let m = 0.5 * (lo + hi);
            if self.at(&ray(m)) < r {
                lo = m;
            } else {
                hi = m;
            }
        }
        Some(ray(0.5 * (lo + hi)))
    }
}

/// Product rule in hyperspherical angles: midpoint nodes on the periodic
/// azimuth, Gauss–Legendre on each polar angle.
#[derive(Clone, Debug)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl SphereRule {
    /// `azimuth` nodes on the full circle, `azimuth / 2` on each polar angle.
    pub fn new(dim: usize, azimuth: usize) -> Self {
        assert!(dim >= 2 && azimuth >= 2);
        let mut nodes = Vec::with_capacity(dim - 1);
        let mut weights = Vec::with_capacity(dim - 1);
        let polar = GaussLegendre::new((azimuth / 2).max(1));
        for _ in 0..dim - 2 {
            nodes.push(polar.nodes.iter().map(|x| 0.5 * PI * (x + 1.0)).collect());
            weights.push(polar.weights.iter().map(|w| 0.5 * PI * w).collect());
        }
        let step = 2.0 * PI / azimuth as f64;
        nodes.push((0..azimuth).map(|j| (j as f64 + 0.5) * step).collect());
        weights.push(vec![step; azimuth]);
        SphereRule { dim, nodes, weights }
    }

    /// 512 nodes on circles, 64×128 on 2-spheres, coarser above.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            2 => Self::new(2, 512),
            3 => Self::new(3, 128),
            _ => Self::new(dim, 32),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every node as `(angles, unit direction, angular weight, rule
    /// weight)`; the angular weight includes the Euclidean angular Jacobian.
    fn for_each<F: FnMut(&[f64], &[f64], f64, f64)>(&self, mut f: F) {
        let m = self.nodes.len();
        let mut idx = vec![0usize; m];
        let mut ang = vec![0.0; m];
        let mut dir = vec![0.0; self.dim];
        for _ in 0..self.len() {
            let mut w = 1.0;
            for k in 0..m {
                ang[k] = self.nodes[k][idx[k]];
                w *= self.weights[k][idx[k]];
            }
            direction(&ang, &mut dir);
            f(&ang, &dir, w * angular_jacobian(&ang), w);
            for k in (0..m).rev() {
                idx[k] += 1;
                if idx[k] < self.nodes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

fn direction(ang: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut s = 1.0;
    for k in 0..n - 1 {
        out[k] = s * ang[k].cos();
        s *= ang[k].sin();
    }
    out[n - 1] = s;
}

fn angular_jacobian(ang: &[f64]) -> f64 {
    let m = ang.len();
    (0..m.saturating_sub(1))
        .map(|k| ang[k].sin().powi((m - 1 - k) as i32))
        .product()
}

/// Integrates over geodesic spheres about a fixed center.
#[derive(Clone, Debug)]
pub struct SphereSampler {
    chart: MetricChart,
    dist: CenteredDistance,
    rule: SphereRule,
}

impl SphereSampler {
    pub fn new(chart: &MetricChart, center: &[f64]) -> Result<Self> {
        Ok(Self::with_distance(chart, CenteredDistance::new(chart, center)?))
    }

    pub fn with_distance(chart: &MetricChart, dist: CenteredDistance) -> Self {
        SphereSampler {
            chart: chart.clone(),
            rule: SphereRule::default_for(chart.dim()),
            dist,
        }
    }

    pub fn with_rule(mut self, rule: SphereRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn distance(&self) -> &CenteredDistance {
        &self.dist
    }
    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }
    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }

    /// `∫_{S(x0, r)} f dA`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, r: f64, f: F) -> Result<f64> {
        ensure!(r >= 0.0 && r.is_finite(), Precondition, "sphere radius must be nonnegative, got {r}");
        ensure!(
            r <= self.chart.patch_radius(),
            Precondition,
            "radius {r} exceeds the normal-patch guard r_max = {}",
            self.chart.patch_radius()
        );
        if r == 0.0 {
            return Ok(0.0);
        }
        let n = self.chart.dim();
        let mut parts = Vec::with_capacity(self.rule.len());
        let mut failure = None;
        if self.dist.is_flat() {
            let scale = r.powi(n as i32 - 1);
            let c = self.dist.center();
            let mut x = vec![0.0; n];
            self.rule.for_each(|_, dir, w, _| {
                for k in 0..n {
                    x[k] = c[k] + r * dir[k];
                }
                if failure.is_none() && !self.chart.contains(&x) {
                    failure = Some(x.clone());
                }
                parts.push(w * scale * f(&x));
            });
        } else {
            let h = 1e-5;
            let mut g = vec![0.0; n * n];
            let mut dir2 = vec![0.0; n];
            let mut ang2 = vec![0.0; n - 1];
            self.rule.for_each(|ang, dir, _, cell| {
                if failure.is_some() {
                    return;
                }
                let Some(x) = self.dist.point_at(dir, r) else {
                    failure = Some(dir.to_vec());
                    return;
                };
                // tangent vectors by central differences in the angles
                let mut jac = DMatrix::<f64>::zeros(n, n - 1);
                for k in 0..n - 1 {
                    ang2.copy_from_slice(ang);
                    ang2[k] = ang[k] + h;
                    direction(&ang2, &mut dir2);
                    let p = self.dist.point_at(&dir2, r);
                    ang2[k] = ang[k] - h;
                    direction(&ang2, &mut dir2);
                    let q = self.dist.point_at(&dir2, r);
                    let (Some(p), Some(q)) = (p, q) else {
                        failure = Some(dir.to_vec());
                        return;
                    };
                    for i in 0..n {
                        jac[(i, k)] = (p[i] - q[i]) / (2.0 * h);
                    }
                }
                self.chart.metric_at(&x, &mut g);
                let gm = DMatrix::from_row_slice(n, n, &g);
                let det = (jac.transpose() * gm * &jac).determinant();
                parts.push(cell * det.max(0.0).sqrt() * f(&x));
            });
        }
        if let Some(x) = failure {
            return Err(Error::Domain(format!(
                "geodesic sphere of radius {r} leaves the chart domain (near {x:?})"
            )));
        }
        Ok(pairwise_sum(&parts))
    }

    /// `(1 / r^{n-1}) ∫_{S(x0, r)} f dA`.
    pub fn normalized_mean<F: Fn(&[f64]) -> f64>(&self, r: f64, f: F) -> Result<f64> {
        ensure!(r > 0.0, Precondition, "normalized sphere mean needs r > 0");
        Ok(self.integrate(r, f)? / r.powi(self.chart.dim() as i32 - 1))
    }

    /// Every quadrature node on `S(x0, r)`.
    pub fn nodes(&self, r: f64) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(self.rule.len());
        let mut bad = false;
        self.rule.for_each(|_, dir, _, _| match self.dist.point_at(dir, r) {
            Some(x) => out.push(x),
            None => bad = true,
        });
        ensure!(!bad, Domain, "geodesic sphere of radius {r} leaves the chart domain");
        Ok(out)
    }
}

/// `∫_{S(x0, r)} f dA` with the default angular rule.
pub fn sphere_quadrature<F: Fn(&[f64]) -> f64>(x0: &[f64], r: f64, f: F, chart: &MetricChart) -> Result<f64> {
    ensure!(
        r <= chart.patch_radius(),
        Precondition,
        "radius {r} exceeds the normal-patch guard r_max = {}",
        chart.patch_radius()
    );
    SphereSampler::new(chart, x0)?.integrate(r, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_and_sphere_areas() {
        let c2 = MetricChart::euclidean(2, 4.0);
        let v = sphere_quadrature(&[0.0, 0.0], 2.0, |_| 1.0, &c2).unwrap();
        assert_relative_eq!(v, 4.0 * PI, max_relative = 1e-12);
        let c3 = MetricChart::euclidean(3, 4.0);
        let v = sphere_quadrature(&[0.0, 0.0, 0.0], 1.5, |_| 1.0, &c3).unwrap();
        assert_relative_eq!(v, 4.0 * PI * 2.25, max_relative = 1e-4);
    }

    #[test]
    fn half_circle_indicator() {
        let c = MetricChart::euclidean(2, 2.0);
        let v = sphere_quadrature(&[0.0, 0.0], 1.0, |x| if x[1] > 0.0 { 1.0 } else { 0.0 }, &c).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-12);
    }

    #[test]
    fn poincare_circle_has_hyperbolic_circumference() {
        // hyperbolic circle of radius r has circumference 2π sinh r
        let c = MetricChart::poincare(2);
        for x0 in [[0.0, 0.0], [0.2, -0.1]] {
            let v = sphere_quadrature(&x0, 1.0, |_| 1.0, &c).unwrap();
            assert_relative_eq!(v, 2.0 * PI * 1f64.sinh(), max_relative = 1e-5);
        }
    }

    #[test]
    fn hyperbolic_sphere_area_in_three_dimensions() {
        let c = MetricChart::poincare(3);
        let s = SphereSampler::new(&c, &[0.1, 0.0, 0.0]).unwrap().with_rule(SphereRule::new(3, 48));
        let v = s.integrate(0.8, |_| 1.0).unwrap();
        assert_relative_eq!(v, 4.0 * PI * 0.8f64.sinh().powi(2), max_relative = 2e-3);
    }

    #[test]
    fn radius_beyond_patch_guard_is_rejected() {
        let c = MetricChart::poincare(2);
        let r = sphere_quadrature(&[0.0, 0.0], 10.0, |_| 1.0, &c);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
