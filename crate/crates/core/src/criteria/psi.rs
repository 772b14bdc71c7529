use crate::error::{ensure, Error, Result};
use crate::geometry::SphereSampler;
use crate::numeric::{integrate_log, log_panels};
use crate::ringmap::QField;

#[derive(Clone, Debug)]
pub enum PsiKind {
    /// `ψ(t) = 1 / (t log(1/t))^{n/p}`.
    LogPower,
    /// `ψ(t) = 1 / t`.
    Reciprocal,
    /// `ψ(t) = 1 / (t^{(n-1)/(p-1)} q(t)^{1/(p-1)})` on `(r1, r2)`, 0 outside,
    /// with `q` the spherical mean of Q normalized by `t^{n-1}`.
    WeightedInverse {
        q: QField,
        sampler: SphereSampler,
        r1: f64,
        r2: f64,
    },
}

/// Test function family `ψ` with its normalizer `I(ε, ε0) = ∫_ε^ε0 ψ`.
#[derive(Clone, Debug)]
pub struct PsiFamily {
    pub kind: PsiKind,
    pub n: usize,
    pub p: f64,
}

impl PsiFamily {
    pub fn log_power(n: usize, p: f64) -> Self {
        PsiFamily {
            kind: PsiKind::LogPower,
            n,
            p,
        }
    }

    pub fn reciprocal(n: usize, p: f64) -> Self {
        PsiFamily {
            kind: PsiKind::Reciprocal,
            n,
            p,
        }
    }

    pub fn weighted_inverse(q: QField, sampler: SphereSampler, p: f64, r1: f64, r2: f64) -> Result<Self> {
        ensure!(0.0 < r1 && r1 < r2, Precondition, "ψ support needs 0 < r1 < r2");
        let n = sampler.chart().dim();
        Ok(PsiFamily {
            kind: PsiKind::WeightedInverse { q, sampler, r1, r2 },
            n,
            p,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PsiKind::LogPower => "log_power",
            PsiKind::Reciprocal => "reciprocal",
            PsiKind::WeightedInverse { .. } => "weighted_inverse",
        }
    }

    /// `ψ(t)`; NaN where the formula is undefined (e.g. `t ≥ 1` for LogPower).
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.n as f64;
        match &self.kind {
            PsiKind::LogPower => {
                let l = (1.0 / t).ln();
                if l > 0.0 {
                    (t * l).powf(-n / self.p)
                } else {
                    f64::NAN
                }
            }
            PsiKind::Reciprocal => 1.0 / t,
            PsiKind::WeightedInverse { q, sampler, r1, r2 } => {
                if t <= *r1 || t >= *r2 {
                    return 0.0;
                }
                match sampler.integrate(t, |x| q.eval(x)) {
                    Ok(s) => {
                        let qm = s / t.powf(n - 1.0);
                        t.powf(-(n - 1.0) / (self.p - 1.0)) * qm.powf(-1.0 / (self.p - 1.0))
                    }
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// `I(ε, ε0)`; an error unless finite and positive.
    pub fn normalizer(&self, eps: f64, eps0: f64) -> Result<f64> {
        ensure!(0.0 < eps && eps < eps0, Precondition, "need 0 < ε < ε0, got ε = {eps}, ε0 = {eps0}");
        let i = integrate_log(eps, eps0, 2 * log_panels(eps, eps0, 6), |t| self.eval(t));
        if !(i.is_finite() && i > 0.0) {
            return Err(Error::PsiNormalization(format!(
                "I({eps}, {eps0}) = {i} for {} ψ",
                self.name()
            )));
        }
        Ok(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_power_normalizer_is_log_of_log_ratio() {
        let psi = PsiFamily::log_power(2, 2.0);
        assert_relative_eq!(psi.normalizer(0.01, 0.1).unwrap(), 2f64.ln(), max_relative = 1e-10);
        assert!(matches!(psi.normalizer(0.5, 2.0), Err(Error::PsiNormalization(_))));
        let r = PsiFamily::reciprocal(2, 1.5);
        assert_relative_eq!(r.normalizer(0.01, 0.1).unwrap(), 10f64.ln(), max_relative = 1e-12);
    }
}
