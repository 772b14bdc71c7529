use std::sync::Arc;

use nalgebra::DMatrix;
use smallvec::SmallVec;

use crate::error::{ensure, Error, Result};
use crate::expr::Expr;
use crate::geometry::Lattice;
use crate::numeric::dist;

pub(crate) type Buf = SmallVec<[f64; 4]>;

/// Axis-aligned box in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        ensure!(lo.len() == hi.len(), Precondition, "box corners differ in dimension");
        ensure!(
            lo.iter().zip(&hi).all(|(l, h)| h > l),
            Precondition,
            "box has an empty axis"
        );
        Ok(BoxDomain { lo, hi })
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        BoxDomain {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }
}

/// Scalar factor `λ(x)` of a conformal metric `g = λ² δ`.
#[derive(Clone, Debug)]
pub enum ConformalFactor {
    /// Poincaré ball model: `λ = 2 / (1 - |x|²)`, valid for `|x| < 1`.
    Poincare,
    /// Stereographic chart of the unit sphere: `λ = 2 / (1 + |x|²)`.
    Stereographic,
    Expression(Expr),
}

impl ConformalFactor {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ConformalFactor::Poincare => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                if s < 1.0 {
                    2.0 / (1.0 - s)
                } else {
                    f64::NAN
                }
            }
            ConformalFactor::Stereographic => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                2.0 / (1.0 + s)
            }
            ConformalFactor::Expression(e) => e.eval(x),
        }
    }
}

/// Cell-sampled metric tensor field; lookups are piecewise constant.
#[derive(Debug)]
pub struct TensorGrid {
    lattice: Lattice,
    /// `n*n` row-major entries per cell.
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl TensorGrid {
    /// Cells whose tensor contains a non-finite entry are blocked. Finite
    /// tensors must be symmetric positive-definite.
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        let n = lattice.dim();
        let cells = lattice.num_cells();
        ensure!(
            values.len() == cells * n * n,
            Precondition,
            "tensor grid expects {} values, got {}",
            cells * n * n,
            values.len()
        );
        let mut valid = vec![false; cells];
        for (c, ok) in valid.iter_mut().enumerate() {
            let g = &values[c * n * n..(c + 1) * n * n];
            if g.iter().any(|v| !v.is_finite()) {
                continue;
            }
            for i in 0..n {
                for j in 0..i {
                    let (a, b) = (g[i * n + j], g[j * n + i]);
                    ensure!(
                        (a - b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0),
                        Precondition,
                        "metric tensor at cell {c} is not symmetric"
                    );
                }
            }
            let m = DMatrix::from_row_slice(n, n, g);
            ensure!(
                m.cholesky().is_some(),
                Precondition,
                "metric tensor at cell {c} is not positive-definite"
            );
            *ok = true;
        }
        Ok(TensorGrid {
            lattice,
            values,
            valid,
        })
    }

    /// Samples a tensor function at the cell centers of `lattice`.
    pub fn from_fn<F: Fn(&[f64], &mut [f64])>(lattice: Lattice, f: F) -> Result<Self> {
        let n = lattice.dim();
        let mut values = vec![0.0; lattice.num_cells() * n * n];
        let mut c = vec![0.0; n];
        for idx in 0..lattice.num_cells() {
            lattice.center(idx, &mut c);
            f(&c, &mut values[idx * n * n..(idx + 1) * n * n]);
        }
        Self::new(lattice, values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn tensor(&self, x: &[f64]) -> Option<&[f64]> {
        let n = self.lattice.dim();
        let c = self.lattice.locate(x)?;
        if self.valid[c] {
            Some(&self.values[c * n * n..(c + 1) * n * n])
        } else {
            None
        }
    }
}

#[derive(Clone, Debug)]
pub enum MetricKind {
    Euclidean,
    Conformal(ConformalFactor),
    GeneralGrid(Arc<TensorGrid>),
}

/// A coordinate chart with a Riemannian metric `g_ij(x)`.
#[derive(Clone, Debug)]
pub struct MetricChart {
    dim: usize,
    domain: BoxDomain,
    metric: MetricKind,
    patch_radius: f64,
}

impl MetricChart {
    pub fn new(dim: usize, domain: BoxDomain, metric: MetricKind, patch_radius: f64) -> Result<Self> {
        ensure!(dim >= 2, Precondition, "charts need dimension n >= 2, got {dim}");
        ensure!(
            domain.lo.len() == dim,
            Precondition,
            "domain box dimension {} does not match chart dimension {dim}",
            domain.lo.len()
        );
        ensure!(patch_radius > 0.0, Precondition, "patch radius must be positive");
        if let MetricKind::GeneralGrid(g) = &metric {
            ensure!(
                g.lattice.dim() == dim,
                Precondition,
                "tensor grid dimension does not match chart"
            );
        }
        Ok(MetricChart {
            dim,
            domain,
            metric,
            patch_radius,
        })
    }

    /// Flat chart on the cube `[-half, half]^dim`.
    pub fn euclidean(dim: usize, half: f64) -> Self {
        Self::new(dim, BoxDomain::cube(dim, half), MetricKind::Euclidean, f64::INFINITY)
            .expect("valid euclidean chart")
    }

    pub fn euclidean_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let dim = lo.len();
        Self::new(dim, BoxDomain::new(lo, hi)?, MetricKind::Euclidean, f64::INFINITY)
    }

    /// Poincaré ball model on `[-1, 1]^dim`; the normal patch is guarded at
    /// hyperbolic radius `2 artanh(0.95)`.
    pub fn poincare(dim: usize) -> Self {
        Self::new(
            dim,
            BoxDomain::cube(dim, 1.0),
            MetricKind::Conformal(ConformalFactor::Poincare),
            2.0 * 0.95f64.atanh(),
        )
        .expect("valid poincare chart")
    }

    /// Stereographic chart of the unit sphere on `[-half, half]^dim`.
    pub fn stereographic(dim: usize, half: f64) -> Self {
        Self::new(
            dim,
            BoxDomain::cube(dim, half),
            MetricKind::Conformal(ConformalFactor::Stereographic),
            0.9 * std::f64::consts::PI,
        )
        .expect("valid stereographic chart")
    }

    pub fn with_patch_radius(mut self, r_max: f64) -> Self {
        self.patch_radius = r_max;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    pub fn metric(&self) -> &MetricKind {
        &self.metric
    }
    /// Declared radius `r_max` of the normal-coordinate patch.
    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.metric, MetricKind::Euclidean)
    }

    /// Short label for reports.
    pub fn kind_name(&self) -> &'static str {
        match &self.metric {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Conformal(ConformalFactor::Poincare) => "poincare",
            MetricKind::Conformal(ConformalFactor::Stereographic) => "stereographic",
            MetricKind::Conformal(ConformalFactor::Expression(_)) => "conformal",
            MetricKind::GeneralGrid(_) => "grid",
        }
    }

    /// `λ(x)` when the metric is conformally flat, `None` for tensor grids.
    #[inline]
    pub fn conformal_factor(&self, x: &[f64]) -> Option<f64> {
        match &self.metric {
            MetricKind::Euclidean => Some(1.0),
            MetricKind::Conformal(f) => Some(f.eval(x)),
            MetricKind::GeneralGrid(_) => None,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        !matches!(self.metric, MetricKind::GeneralGrid(_))
    }

    /// True when `x` is inside the domain box and the metric is defined there.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || !self.domain.contains(x) {
            return false;
        }
        match &self.metric {
            MetricKind::Euclidean => true,
            MetricKind::Conformal(f) => {
                let l = f.eval(x);
                l.is_finite() && l > 0.0
            }
            MetricKind::GeneralGrid(g) => g.tensor(x).is_some(),
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point {x:?} is outside the chart domain")))
        }
    }

    /// Writes `g_ij(x)` (row-major) into `out`; NaN when undefined.
    pub fn metric_at(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        match &self.metric {
            MetricKind::GeneralGrid(g) => match g.tensor(x) {
                Some(t) => out[..n * n].copy_from_slice(t),
                None => out[..n * n].fill(f64::NAN),
            },
            _ => {
                let l = self.conformal_factor(x).unwrap_or(f64::NAN);
                out[..n * n].fill(0.0);
                for i in 0..n {
                    out[i * n + i] = l * l;
                }
            }
        }
    }

    /// `sqrt(det g_ij(x))`, the density of the volume measure.
    pub fn volume_density(&self, x: &[f64]) -> f64 {
        if !self.domain.contains(x) {
            return f64::NAN;
        }
        match &self.metric {
            MetricKind::Euclidean => 1.0,
            MetricKind::Conformal(f) => f.eval(x).powi(self.dim as i32),
            MetricKind::GeneralGrid(g) => match g.tensor(x) {
                Some(t) => DMatrix::from_row_slice(self.dim, self.dim, t).determinant().sqrt(),
                None => f64::NAN,
            },
        }
    }

    /// Metric length of the straight chart segment `a -> b`, metric evaluated at the midpoint.
    #[inline]
    pub fn segment_length(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim;
        let mut mid = Buf::with_capacity(n);
        for k in 0..n {
            mid.push(0.5 * (a[k] + b[k]));
        }
        match &self.metric {
            MetricKind::Euclidean => dist(a, b),
            MetricKind::Conformal(f) => f.eval(&mid) * dist(a, b),
            MetricKind::GeneralGrid(g) => match g.tensor(&mid) {
                Some(t) => quad_form(t, a, b, n).sqrt(),
                None => f64::NAN,
            },
        }
    }

    /// Metric length of a straight segment with `pieces` midpoint evaluations.
    pub fn segment_length_refined(&self, a: &[f64], b: &[f64], pieces: usize) -> f64 {
        if pieces <= 1 {
            return self.segment_length(a, b);
        }
        let n = self.dim;
        let mut p0 = Buf::from_slice(a);
        let mut p1 = Buf::from_elem(0.0, n);
        let mut total = 0.0;
        for j in 1..=pieces {
            let t = j as f64 / pieces as f64;
            for k in 0..n {
                p1[k] = a[k] + t * (b[k] - a[k]);
            }
            total += self.segment_length(&p0, &p1);
            p0.copy_from_slice(&p1);
        }
        total
    }

    /// Closed-form geodesic distance for the models that have one.
    pub fn analytic_distance(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        match &self.metric {
            MetricKind::Euclidean => Some(dist(x, y)),
            MetricKind::Conformal(ConformalFactor::Poincare) => {
                let sx: f64 = x.iter().map(|v| v * v).sum();
                let sy: f64 = y.iter().map(|v| v * v).sum();
                if sx >= 1.0 || sy >= 1.0 {
                    return None;
                }
                let s = dist(x, y) / ((1.0 - sx) * (1.0 - sy)).sqrt();
                Some(2.0 * s.asinh())
            }
            MetricKind::Conformal(ConformalFactor::Stereographic) => {
                let sx: f64 = x.iter().map(|v| v * v).sum();
                let sy: f64 = y.iter().map(|v| v * v).sum();
                let chord = 2.0 * dist(x, y) / ((1.0 + sx) * (1.0 + sy)).sqrt();
                Some(2.0 * (0.5 * chord).min(1.0).asin())
            }
            _ => None,
        }
    }

    pub fn has_analytic_distance(&self) -> bool {
        matches!(
            self.metric,
            MetricKind::Euclidean
                | MetricKind::Conformal(ConformalFactor::Poincare)
                | MetricKind::Conformal(ConformalFactor::Stereographic)
        )
    }
}

#[inline]
fn quad_form(g: &[f64], a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let di = b[i] - a[i];
        for j in 0..n {
            acc += g[i * n + j] * di * (b[j] - a[j]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poincare_distance_from_origin_is_twice_artanh() {
        let c = MetricChart::poincare(2);
        let d = c.analytic_distance(&[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_relative_eq!(d, 3f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(d, 2.0 * 0.5f64.atanh(), max_relative = 1e-14);
    }

    #[test]
    fn stereographic_distance_to_infinity_limit() {
        let c = MetricChart::stereographic(2, 10.0);
        // the unit circle maps to the equator: distance π/2 from the pole
        let d = c.analytic_distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(d, std::f64::consts::FRAC_PI_2, max_relative = 1e-14);
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let c = MetricChart::euclidean(3, 1.0);
        let mut g = [0.0; 9];
        c.metric_at(&[0.1, 0.2, 0.3], &mut g);
        assert_eq!(g, [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(c.volume_density(&[0.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn tensor_grid_rejects_indefinite_metrics() {
        let l = Lattice::new(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
        let bad = TensorGrid::from_fn(l.clone(), |_, g| g.copy_from_slice(&[1.0, 0.0, 0.0, -1.0]));
        assert!(bad.is_err());
        let asym = TensorGrid::from_fn(l.clone(), |_, g| g.copy_from_slice(&[1.0, 0.5, 0.0, 1.0]));
        assert!(asym.is_err());
        let ok = TensorGrid::from_fn(l, |_, g| g.copy_from_slice(&[4.0, 0.0, 0.0, 1.0])).unwrap();
        let chart = MetricChart::new(
            2,
            BoxDomain::cube(2, 1.0),
            MetricKind::GeneralGrid(Arc::new(ok)),
            1.0,
        );
        // box [-1,1] is wider than the tensor lattice [0,1]: outside cells are undefined
        let chart = chart.unwrap();
        assert!(chart.contains(&[0.5, 0.5]));
        assert!(!chart.contains(&[-0.5, 0.5]));
        assert_relative_eq!(chart.volume_density(&[0.5, 0.5]), 2.0, max_relative = 1e-14);
        assert_relative_eq!(chart.segment_length(&[0.1, 0.5], &[0.6, 0.5]), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn nan_tensor_cells_are_blocked() {
        let l = Lattice::new(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
        let g = TensorGrid::from_fn(l, |x, g| {
            if x[0] < 0.5 {
                g.fill(f64::NAN)
            } else {
                g.copy_from_slice(&[1.0, 0.0, 0.0, 1.0])
            }
        })
        .unwrap();
        assert_eq!(g.valid, vec![false, false, true, true]);
    }
}
