use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::geometry::GeodesicAnnulus;
use crate::numeric::{pairwise_sum, GaussLegendre};
use crate::ringmap::QField;

/// Step function `η` on `(r1, r2)`: value `values[i]` on `[breaks[i], breaks[i+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl EtaProfile {
    pub fn new(label: &str, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure!(
            breaks.len() >= 2 && values.len() == breaks.len() - 1,
            Precondition,
            "η needs k+1 breaks for k values, got {} and {}",
            breaks.len(),
            values.len()
        );
        ensure!(
            breaks[0] > 0.0 && breaks.windows(2).all(|w| w[1] > w[0]),
            Precondition,
            "η breaks must be positive and increasing"
        );
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidProfile(format!("η `{label}` has a negative or non-finite value")));
        }
        Ok(EtaProfile {
            breaks,
            values,
            label: label.to_string(),
        })
    }

    /// `1 / (r2 - r1)`.
    pub fn uniform(r1: f64, r2: f64) -> Result<Self> {
        ensure!(r2 > r1 && r1 > 0.0, Precondition, "η needs 0 < r1 < r2");
        Self::new("uniform", vec![r1, r2], vec![1.0 / (r2 - r1)])
    }

    /// `pieces` log-spaced steps carrying the interval means of `f`.
    pub fn from_fn<F: FnMut(f64) -> f64>(label: &str, r1: f64, r2: f64, pieces: usize, mut f: F) -> Result<Self> {
        ensure!(r2 > r1 && r1 > 0.0, Precondition, "η needs 0 < r1 < r2");
        let pieces = pieces.max(1);
        let breaks: Vec<f64> = (0..=pieces)
            .map(|i| r1 * (r2 / r1).powf(i as f64 / pieces as f64))
            .collect();
        let rule = GaussLegendre::new(4);
        let values = breaks
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], &mut f) / (w[1] - w[0]))
            .collect();
        Self::new(label, breaks, values)
    }

    /// Extremal profile `ψ / ∫ψ` with `ψ(t) = t^{-(n-1)/(p-1)} q(t)^{-1/(p-1)}`,
    /// where `q(t)` is the spherical mean of Q normalized by `t^{n-1}`.
    pub fn extremal(annulus: &GeodesicAnnulus, q: &QField, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::UnsupportedExponent(p));
        }
        let n = annulus.dim() as f64;
        let (r1, r2) = (annulus.r1(), annulus.r2());
        let sampler = annulus.sampler();
        let mut err = None;
        let psi = |t: f64| -> f64 {
            let qm = match q.as_constant() {
                Some(c) if annulus.chart().is_euclidean() => c * crate::numeric::unit_sphere_area(annulus.dim()),
                _ => match sampler.integrate(t, |x| q.eval(x)) {
                    Ok(s) => s / t.powf(n - 1.0),
                    Err(e) => {
                        err.get_or_insert(e);
                        return 0.0;
                    }
                },
            };
            if qm > 0.0 {
                t.powf(-(n - 1.0) / (p - 1.0)) * qm.powf(-1.0 / (p - 1.0))
            } else {
                0.0
            }
        };
        let raw = Self::from_fn("extremal", r1, r2, 256, psi)?;
        if let Some(e) = err {
            return Err(e);
        }
        let total = raw.normalization();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidProfile(
                "extremal η is not normalizable: Q vanishes on every sphere".into(),
            ));
        }
        Ok(raw.scaled(1.0 / total))
    }

    /// Seeded step profile with 3 to 6 steps, normalized to `∫η = 1`.
    pub fn random_steps(r1: f64, r2: f64, seed: u64) -> Result<Self> {
        ensure!(r2 > r1 && r1 > 0.0, Precondition, "η needs 0 < r1 < r2");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(3..=6usize);
        let mut inner: Vec<f64> = (0..k - 1).map(|_| rng.random_range(r1..r2)).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut breaks = vec![r1];
        breaks.extend(inner.into_iter().filter(|b| *b > r1 && *b < r2));
        breaks.push(r2);
        let values = (0..breaks.len() - 1).map(|_| rng.random_range(0.2..2.0)).collect();
        let raw = Self::new(&format!("random_steps(seed={seed})"), breaks, values)?;
        let total = raw.normalization();
        Ok(raw.scaled(1.0 / total))
    }

    pub fn scaled(&self, s: f64) -> Self {
        EtaProfile {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            label: self.label.clone(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ η dr`.
    pub fn normalization(&self) -> f64 {
        let parts: Vec<f64> = self
            .values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .collect();
        pairwise_sum(&parts)
    }

    /// `η(r)`, 0 outside `[r1, r2]`.
    pub fn at(&self, r: f64) -> f64 {
        let (lo, hi) = (self.breaks[0], *self.breaks.last().expect("two breaks"));
        if !(r >= lo && r <= hi) {
            return 0.0;
        }
        let i = self.breaks.partition_point(|b| *b <= r).saturating_sub(1);
        self.values[i.min(self.values.len() - 1)]
    }

    /// Errors unless `∫η ≥ 1 - tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let total = self.normalization();
        if total < 1.0 - tol {
            return Err(Error::InvalidProfile(format!(
                "η `{}` integrates to {total}, below 1",
                self.label
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricChart;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn uniform_and_random_profiles_are_normalized() {
        let u = EtaProfile::uniform(1.0, E).unwrap();
        assert_relative_eq!(u.normalization(), 1.0, max_relative = 1e-15);
        for seed in 0..5 {
            let r = EtaProfile::random_steps(1.0, E, seed).unwrap();
            assert_relative_eq!(r.normalization(), 1.0, max_relative = 1e-12);
            assert!(r.len() >= 2);
        }
        assert_eq!(EtaProfile::random_steps(1.0, 2.0, 3).unwrap(), EtaProfile::random_steps(1.0, 2.0, 3).unwrap());
    }

    #[test]
    fn zero_profile_fails_normalization() {
        let z = EtaProfile::new("zero", vec![1.0, 2.0], vec![0.0]).unwrap();
        assert!(matches!(z.check_normalized(1e-6), Err(Error::InvalidProfile(_))));
        assert!(EtaProfile::new("neg", vec![1.0, 2.0], vec![-1.0]).is_err());
    }

    #[test]
    fn extremal_profile_for_constant_q_is_inverse_radius() {
        let chart = MetricChart::euclidean(2, 3.0);
        let a = GeodesicAnnulus::new(&chart, &[0.0, 0.0], 1.0, E).unwrap();
        let q = QField::constant(1.0).unwrap();
        let eta = EtaProfile::extremal(&a, &q, 2.0).unwrap();
        assert_relative_eq!(eta.normalization(), 1.0, max_relative = 1e-12);
        // 1/r on (1, e) has unit integral
        assert_relative_eq!(eta.at(1.5), 1.0 / 1.5, max_relative = 5e-3);
        assert_eq!(eta.at(3.0), 0.0);
    }
}
