use crate::error::{ensure, Error, Result};
use crate::geometry::{Lattice, MetricChart};
use crate::modulus::DensityField;
use crate::numeric::dist;

/// Polyline in chart coordinates, vertices stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    dim: usize,
    coords: Vec<f64>,
    /// Euclidean chart length of each segment.
    steps: Vec<f64>,
}

impl DiscreteCurve {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        ensure!(dim >= 1, Precondition, "curve dimension must be positive");
        ensure!(
            coords.len().is_multiple_of(dim),
            Precondition,
            "coordinate count {} is not a multiple of dimension {dim}",
            coords.len()
        );
        ensure!(
            coords.len() / dim >= 2,
            Precondition,
            "a curve needs at least two vertices, got {}",
            coords.len() / dim
        );
        ensure!(
            coords.iter().all(|v| v.is_finite()),
            Domain,
            "curve has a non-finite vertex coordinate"
        );
        let steps = coords
            .chunks_exact(dim)
            .zip(coords.chunks_exact(dim).skip(1))
            .map(|(a, b)| dist(a, b))
            .collect();
        Ok(DiscreteCurve { dim, coords, steps })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        ensure!(!points.is_empty(), Precondition, "a curve needs at least two vertices, got 0");
        let dim = points[0].as_ref().len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            ensure!(p.as_ref().len() == dim, Precondition, "vertices differ in dimension");
            coords.extend_from_slice(p.as_ref());
        }
        Self::new(dim, coords)
    }

    /// Straight chart segment `a -> b` split into pieces no longer than `max_step`.
    pub fn segment(a: &[f64], b: &[f64], max_step: f64) -> Result<Self> {
        ensure!(max_step > 0.0, Precondition, "step must be positive");
        let pieces = ((dist(a, b) / max_step).ceil() as usize).max(1);
        let dim = a.len();
        let mut coords = Vec::with_capacity((pieces + 1) * dim);
        for j in 0..=pieces {
            let t = j as f64 / pieces as f64;
            coords.extend(a.iter().zip(b).map(|(x, y)| x + t * (y - x)));
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
    pub fn first(&self) -> &[f64] {
        self.vertex(0)
    }
    pub fn last(&self) -> &[f64] {
        self.vertex(self.num_vertices() - 1)
    }
    /// Euclidean chart lengths of the segments.
    pub fn chart_steps(&self) -> &[f64] {
        &self.steps
    }
    pub fn max_chart_step(&self) -> f64 {
        self.steps.iter().cloned().fold(0.0, f64::max)
    }

    /// Inserts vertices so no segment is longer than `max_step` in the chart.
    pub fn refined(&self, max_step: f64) -> Self {
        if self.max_chart_step() <= max_step {
            return self.clone();
        }
        let n = self.dim;
        let mut coords = Vec::with_capacity(self.coords.len());
        coords.extend_from_slice(self.vertex(0));
        for (i, &s) in self.steps.iter().enumerate() {
            let (a, b) = (self.vertex(i), self.vertex(i + 1));
            let pieces = ((s / max_step).ceil() as usize).max(1);
            for j in 1..=pieces {
                let t = j as f64 / pieces as f64;
                for k in 0..n {
                    coords.push(a[k] + t * (b[k] - a[k]));
                }
            }
        }
        Self::new(n, coords).expect("refinement keeps a valid curve")
    }

    /// Vertices `start..=end` as a curve.
    pub fn subcurve(&self, start: usize, end: usize) -> Result<Self> {
        ensure!(
            start < end && end < self.num_vertices(),
            Precondition,
            "subcurve range {start}..={end} invalid for {} vertices",
            self.num_vertices()
        );
        Self::new(self.dim, self.coords[start * self.dim..(end + 1) * self.dim].to_vec())
    }

    /// `self` followed by `other`; the joint vertex must coincide.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        ensure!(self.dim == other.dim, Precondition, "curves differ in dimension");
        ensure!(
            self.last() == other.first(),
            Precondition,
            "concatenation needs the last vertex of the first curve to equal the first vertex of the second"
        );
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords[self.dim..]);
        Self::new(self.dim, coords)
    }

    pub fn reversed(&self) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for v in self.vertices().collect::<Vec<_>>().into_iter().rev() {
            coords.extend_from_slice(v);
        }
        Self::new(self.dim, coords).expect("reversal keeps a valid curve")
    }

    /// Applies `f` to every coordinate vector.
    pub fn map_points<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for v in self.vertices() {
            coords.extend(f(v));
        }
        Self::new(self.dim, coords)
    }
}

/// Metric length `Σ` over segments, metric evaluated at segment midpoints.
pub fn curve_length(curve: &DiscreteCurve, chart: &MetricChart) -> Result<f64> {
    ensure!(
        curve.dim() == chart.dim(),
        Precondition,
        "curve dimension {} does not match chart dimension {}",
        curve.dim(),
        chart.dim()
    );
    for (i, v) in curve.vertices().enumerate() {
        if !chart.domain().contains(v) {
            return Err(Error::Domain(format!("vertex {i} at {v:?} is outside the chart domain")));
        }
    }
    let mut total = 0.0;
    for i in 0..curve.num_vertices() - 1 {
        let l = chart.segment_length(curve.vertex(i), curve.vertex(i + 1));
        if !l.is_finite() {
            return Err(Error::Domain(format!("segment {i} crosses an undefined part of the metric")));
        }
        total += l;
    }
    Ok(total)
}

/// Splits the curve into pieces no longer than half a cell and reports the
/// cell of each piece's midpoint together with its metric length. Pieces
/// whose midpoint falls off the lattice or on an undefined metric are skipped.
pub(crate) fn for_each_piece<F: FnMut(usize, f64)>(
    curve: &DiscreteCurve,
    lattice: &Lattice,
    chart: &MetricChart,
    mut f: F,
) {
    let n = curve.dim();
    let half = 0.5 * lattice.min_spacing();
    let mut p0 = vec![0.0; n];
    let mut p1 = vec![0.0; n];
    let mut mid = vec![0.0; n];
    for i in 0..curve.num_vertices() - 1 {
        let (a, b) = (curve.vertex(i), curve.vertex(i + 1));
        let pieces = ((curve.steps[i] / half).ceil() as usize).max(1);
        p0.copy_from_slice(a);
        for j in 1..=pieces {
            let t = j as f64 / pieces as f64;
            for k in 0..n {
                p1[k] = a[k] + t * (b[k] - a[k]);
                mid[k] = 0.5 * (p0[k] + p1[k]);
            }
            if let Some(cell) = lattice.locate(&mid) {
                let l = chart.segment_length(&p0, &p1);
                if l.is_finite() && l > 0.0 {
                    f(cell, l);
                }
            }
            p0.copy_from_slice(&p1);
        }
    }
}

/// `∫_γ ρ ds`: `Σ` over half-cell pieces of `ρ(cell of midpoint)·length`.
/// Pieces off the density grid contribute nothing.
pub fn line_integral(rho: &DensityField, curve: &DiscreteCurve, chart: &MetricChart) -> f64 {
    let values = rho.values();
    let mut total = 0.0;
    for_each_piece(curve, rho.grid().lattice(), chart, |c, l| total += values[c] * l);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pythagorean_segment() {
        let c = MetricChart::euclidean(2, 10.0);
        let g = DiscreteCurve::from_points(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(curve_length(&g, &c).unwrap(), 5.0);
    }

    #[test]
    fn poincare_radial_segment() {
        let c = MetricChart::poincare(2);
        let g = DiscreteCurve::segment(&[0.0, 0.0], &[0.5, 0.0], 1e-3).unwrap();
        assert_relative_eq!(curve_length(&g, &c).unwrap(), 3f64.ln(), max_relative = 1e-6);
    }

    #[test]
    fn single_vertex_and_outside_vertices_are_errors() {
        assert!(DiscreteCurve::from_points(&[[0.0, 0.0]]).is_err());
        let c = MetricChart::euclidean(2, 1.0);
        let g = DiscreteCurve::from_points(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert!(matches!(curve_length(&g, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn refinement_and_concatenation() {
        let g = DiscreteCurve::from_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let r = g.refined(0.3);
        assert_eq!(r.num_vertices(), 9);
        assert!(r.max_chart_step() <= 0.3);
        let (a, b) = (r.subcurve(0, 4).unwrap(), r.subcurve(4, 8).unwrap());
        assert_eq!(a.concat(&b).unwrap(), r);
        assert_eq!(r.reversed().reversed(), r);
    }
}
