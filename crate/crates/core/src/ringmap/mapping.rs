use crate::curves::PointMap;
use crate::error::{ensure, Error, Result};
use crate::expr::Expr;
use crate::geometry::{GeodesicAnnulus, MetricChart};
use crate::numeric::dist;

#[derive(Clone, Debug)]
pub enum MapKind {
    Identity,
    /// `f(x) = x0 + (x - x0)|x - x0|^{α-1}`, `f(x0) = x0`.
    RadialStretch(f64),
    /// One expression per target coordinate.
    UserAnalytic(Vec<Expr>),
}

/// Analytic mapping between two charts, centered at `x0`.
#[derive(Clone, Debug)]
pub struct MappingSpec {
    kind: MapKind,
    source: MetricChart,
    target: MetricChart,
    center: Vec<f64>,
}

impl MappingSpec {
    pub fn identity(chart: &MetricChart, center: &[f64]) -> Result<Self> {
        Self::new(MapKind::Identity, chart.clone(), chart.clone(), center)
    }

    pub fn radial_stretch(chart: &MetricChart, center: &[f64], alpha: f64) -> Result<Self> {
        ensure!(
            alpha > 0.0 && alpha <= 1.0,
            Precondition,
            "radial stretch exponent must lie in (0, 1], got {alpha}"
        );
        Self::new(MapKind::RadialStretch(alpha), chart.clone(), chart.clone(), center)
    }

    pub fn user_analytic(source: &MetricChart, target: &MetricChart, center: &[f64], exprs: &[&str]) -> Result<Self> {
        ensure!(
            exprs.len() == target.dim(),
            Precondition,
            "{} component expressions for a {}-dimensional target",
            exprs.len(),
            target.dim()
        );
        let parsed = exprs
            .iter()
            .map(|e| Expr::parse(e, source.dim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(MapKind::UserAnalytic(parsed), source.clone(), target.clone(), center)
    }

    fn new(kind: MapKind, source: MetricChart, target: MetricChart, center: &[f64]) -> Result<Self> {
        ensure!(
            source.dim() == target.dim(),
            Precondition,
            "source and target charts differ in dimension"
        );
        source.check_point(center)?;
        Ok(MappingSpec {
            kind,
            source,
            target,
            center: center.to_vec(),
        })
    }

    /// Same map into a different target chart.
    pub fn with_target(mut self, target: &MetricChart) -> Result<Self> {
        ensure!(target.dim() == self.source.dim(), Precondition, "target chart differs in dimension");
        self.target = target.clone();
        Ok(self)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }
    pub fn source(&self) -> &MetricChart {
        &self.source
    }
    pub fn target(&self) -> &MetricChart {
        &self.target
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MapKind::Identity => "identity".into(),
            MapKind::RadialStretch(a) => format!("radial_stretch({a})"),
            MapKind::UserAnalytic(es) => {
                let parts: Vec<&str> = es.iter().map(Expr::source).collect();
                format!("analytic({})", parts.join(", "))
            }
        }
    }

    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::Identity => x.to_vec(),
            MapKind::RadialStretch(alpha) => {
                let r = dist(x, &self.center);
                if r == 0.0 {
                    return self.center.clone();
                }
                let s = r.powf(alpha - 1.0);
                x.iter().zip(&self.center).map(|(v, c)| c + (v - c) * s).collect()
            }
            MapKind::UserAnalytic(es) => es.iter().map(|e| e.eval(x)).collect(),
        }
    }
}

impl PointMap for MappingSpec {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.source.contains(x) {
            return Err(Error::Domain(format!("{x:?} is outside the source chart of {}", self.label())));
        }
        let y = self.apply_unchecked(x);
        if y.iter().any(|v| !v.is_finite()) || !self.target.contains(&y) {
            return Err(Error::Domain(format!(
                "{} maps {x:?} to {y:?}, outside the target chart",
                self.label()
            )));
        }
        Ok(y)
    }

    /// Known images of centered annuli: the annulus itself under the identity,
    /// `A(x0, r1^α, r2^α)` under a Euclidean radial stretch.
    fn image_support(&self, annulus: &GeodesicAnnulus) -> Option<GeodesicAnnulus> {
        let centered = annulus.center() == self.center.as_slice();
        match &self.kind {
            MapKind::Identity if self.target.kind_name() == self.source.kind_name() => {
                GeodesicAnnulus::new(&self.target, annulus.center(), annulus.r1(), annulus.r2()).ok()
            }
            MapKind::RadialStretch(a) if centered && self.source.is_euclidean() && self.target.is_euclidean() => {
                GeodesicAnnulus::new(&self.target, &self.center, annulus.r1().powf(*a), annulus.r2().powf(*a)).ok()
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn radial_stretch_scales_the_radius() {
        let chart = MetricChart::euclidean(2, 4.0);
        let f = MappingSpec::radial_stretch(&chart, &[0.0, 0.0], 0.5).unwrap();
        let y = f.apply(&[3.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 3f64.sqrt(), max_relative = 1e-15);
        assert_eq!(f.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(MappingSpec::radial_stretch(&chart, &[0.0, 0.0], 1.5).is_err());
        assert!(MappingSpec::radial_stretch(&chart, &[0.0, 0.0], 0.0).is_err());
        assert!(f.apply(&[5.0, 0.0]).is_err());
    }

    #[test]
    fn user_analytic_components() {
        let chart = MetricChart::euclidean(2, 4.0);
        let f = MappingSpec::user_analytic(&chart, &chart, &[0.0, 0.0], &["2*x", "y"]).unwrap();
        assert_eq!(f.apply(&[1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
        assert!(f.apply(&[3.0, 0.0]).is_err());
        assert!(MappingSpec::user_analytic(&chart, &chart, &[0.0, 0.0], &["x"]).is_err());
    }
}
