use crate::error::{ensure, Result};
use crate::geometry::{CenteredDistance, GridDomain, MetricChart, SphereRule, SphereSampler};
use crate::numeric::{integrate_log, log_panels, GaussLegendre};

/// `A(x0, r1, r2) = { x : r1 < d(x, x0) < r2 }` inside a normal patch.
#[derive(Clone, Debug)]
pub struct GeodesicAnnulus {
    center: Vec<f64>,
    r1: f64,
    r2: f64,
    sampler: SphereSampler,
}

impl GeodesicAnnulus {
    pub fn new(chart: &MetricChart, center: &[f64], r1: f64, r2: f64) -> Result<Self> {
        Self::check_radii(chart, r1, r2)?;
        Self::build(SphereSampler::new(chart, center)?, center, r1, r2)
    }

    /// Uses the marched distance of `grid` even when a closed form exists.
    pub fn on_grid(grid: &GridDomain, center: &[f64], r1: f64, r2: f64) -> Result<Self> {
        Self::check_radii(grid.chart(), r1, r2)?;
        let dist = CenteredDistance::on_grid(grid, center)?;
        Self::build(SphereSampler::with_distance(grid.chart(), dist), center, r1, r2)
    }

    pub fn with_distance(chart: &MetricChart, dist: CenteredDistance, r1: f64, r2: f64) -> Result<Self> {
        Self::check_radii(chart, r1, r2)?;
        let center = dist.center().to_vec();
        Self::build(SphereSampler::with_distance(chart, dist), &center, r1, r2)
    }

    fn check_radii(chart: &MetricChart, r1: f64, r2: f64) -> Result<()> {
        ensure!(
            r1 > 0.0 && r2 > r1 && r2.is_finite(),
            Precondition,
            "annulus needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
        );
        ensure!(
            r2 <= chart.patch_radius(),
            Precondition,
            "outer radius {r2} exceeds the normal-patch guard r_max = {}",
            chart.patch_radius()
        );
        Ok(())
    }

    fn build(sampler: SphereSampler, center: &[f64], r1: f64, r2: f64) -> Result<Self> {
        // the outer sphere must fit in the chart
        let coarse = sampler.clone().with_rule(SphereRule::new(sampler.chart().dim(), 16));
        coarse.nodes(r2)?;
        Ok(GeodesicAnnulus {
            center: center.to_vec(),
            r1,
            r2,
            sampler,
        })
    }

    pub fn with_rule(mut self, rule: SphereRule) -> Self {
        self.sampler = self.sampler.with_rule(rule);
        self
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    pub fn chart(&self) -> &MetricChart {
        self.sampler.chart()
    }
    pub fn dim(&self) -> usize {
        self.chart().dim()
    }
    pub fn sampler(&self) -> &SphereSampler {
        &self.sampler
    }
    pub fn distance(&self) -> &CenteredDistance {
        self.sampler.distance()
    }

    /// `d(x, x0)`.
    pub fn radius_of(&self, x: &[f64]) -> f64 {
        self.distance().at(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d = self.radius_of(x);
        d > self.r1 && d < self.r2
    }

    /// Closed annulus with slack `tol` on both radii.
    pub fn contains_closed(&self, x: &[f64], tol: f64) -> bool {
        let d = self.radius_of(x);
        d >= self.r1 - tol && d <= self.r2 + tol
    }

    /// Point of `S(x0, r)` in chart direction `dir`.
    pub fn point_at(&self, dir: &[f64], r: f64) -> Option<Vec<f64>> {
        self.distance().point_at(dir, r)
    }

    /// Chart-coordinate box enclosing the closed annulus, padded by 1%.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        if self.chart().is_euclidean() {
            let lo = self.center.iter().map(|c| c - self.r2).collect();
            let hi = self.center.iter().map(|c| c + self.r2).collect();
            return Ok((lo, hi));
        }
        let nodes = self
            .sampler
            .clone()
            .with_rule(SphereRule::new(n, if n == 2 { 256 } else { 48 }))
            .nodes(self.r2)?;
        let mut lo = self.center.clone();
        let mut hi = self.center.clone();
        for x in &nodes {
            for k in 0..n {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        for k in 0..n {
            let pad = 0.01 * (hi[k] - lo[k]);
            lo[k] -= pad;
            hi[k] += pad;
        }
        let dom = self.chart().domain();
        for k in 0..n {
            lo[k] = lo[k].max(dom.lo[k]);
            hi[k] = hi[k].min(dom.hi[k]);
        }
        Ok((lo, hi))
    }

    /// `∫_A h(d(x, x0)) q(x) dv` by the coarea formula over geodesic spheres,
    /// with log-spaced Gauss–Legendre panels in the radius.
    pub fn integrate<H, Q>(&self, h: H, q: Q) -> Result<f64>
    where
        H: Fn(f64) -> f64,
        Q: Fn(&[f64]) -> f64,
    {
        self.integrate_between(self.r1, self.r2, h, q)
    }

    /// Same as [`integrate`](Self::integrate) over `a < d < b`.
    pub fn integrate_between<H, Q>(&self, a: f64, b: f64, h: H, q: Q) -> Result<f64>
    where
        H: Fn(f64) -> f64,
        Q: Fn(&[f64]) -> f64,
    {
        let panels = log_panels(a, b, 6);
        let mut err = None;
        let v = integrate_log(a, b, panels, |r| {
            let hr = h(r);
            if hr == 0.0 || err.is_some() {
                return 0.0;
            }
            match self.sampler.integrate(r, &q) {
                Ok(s) => hr * s,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Radial profile `S(r) = ∫_{S(x0, r)} q dA` at the Gauss nodes used by
    /// [`integrate`](Self::integrate); lets callers reuse one sphere sweep for
    /// several radial weights.
    pub fn radial_profile<Q: Fn(&[f64]) -> f64>(&self, q: Q) -> Result<RadialProfile> {
        let panels = log_panels(self.r1, self.r2, 6);
        let rule = GaussLegendre::default_rule();
        let (la, lb) = (self.r1.ln(), self.r2.ln());
        let hstep = (lb - la) / panels as f64;
        let mut radii = Vec::new();
        let mut weights = Vec::new();
        let mut values = Vec::new();
        for k in 0..panels {
            let a = la + k as f64 * hstep;
            let half = 0.5 * hstep;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let r = (a + half + half * x).exp();
                radii.push(r);
                weights.push(w * half * r);
                values.push(self.sampler.integrate(r, &q)?);
            }
        }
        Ok(RadialProfile { radii, weights, values })
    }

    /// Metric volume of the annulus.
    pub fn volume(&self) -> Result<f64> {
        self.integrate(|_| 1.0, |_| 1.0)
    }
}

/// Sphere integrals `S(r)` at quadrature radii with their radial weights.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    /// `∫ h(r) S(r) dr`.
    pub fn integrate<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        let parts: Vec<f64> = (0..self.radii.len())
            .map(|i| self.weights[i] * h(self.radii[i]) * self.values[i])
            .collect();
        crate::numeric::pairwise_sum(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn euclidean_annulus_area() {
        let c = MetricChart::euclidean(2, 4.0);
        let a = GeodesicAnnulus::new(&c, &[0.0, 0.0], 1.0, E).unwrap();
        assert_relative_eq!(a.volume().unwrap(), PI * (E * E - 1.0), max_relative = 1e-10);
        assert!(a.contains(&[1.5, 0.0]));
        assert!(!a.contains(&[0.5, 0.0]));
    }

    #[test]
    fn extremal_density_energy() {
        // ∫_A (1/(r log(r2/r1)))² dv = 2π / log(r2/r1)
        let c = MetricChart::euclidean(2, 4.0);
        let a = GeodesicAnnulus::new(&c, &[0.0, 0.0], 1.0, 2.0).unwrap();
        let l = 2f64.ln();
        let v = a.integrate(|r| (1.0 / (r * l)).powi(2), |_| 1.0).unwrap();
        assert_relative_eq!(v, 2.0 * PI / l, max_relative = 1e-10);
    }

    #[test]
    fn poincare_ball_volume() {
        // the hyperbolic disk of radius log 3 is the chart disk |x| < 1/2, area 4π/3
        let c = MetricChart::poincare(2);
        let a = GeodesicAnnulus::new(&c, &[0.0, 0.0], 1e-9, 3f64.ln()).unwrap();
        assert_relative_eq!(a.volume().unwrap(), 4.0 * PI / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn rejects_degenerate_rings_and_patch_overflow() {
        let c = MetricChart::euclidean(2, 4.0);
        assert!(GeodesicAnnulus::new(&c, &[0.0, 0.0], 1.0, 1.0).is_err());
        assert!(GeodesicAnnulus::new(&c, &[0.0, 0.0], 1.0, 5.0).is_err());
        let p = MetricChart::poincare(2);
        assert!(GeodesicAnnulus::new(&p, &[0.0, 0.0], 1.0, 4.0).is_err());
    }
}
