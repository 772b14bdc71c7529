use std::io::Write;

use rayon::prelude::*;

use crate::criteria::fmo::sorted_ladder;
use crate::error::{ensure, Error, Result};
use crate::geometry::{MetricChart, SphereSampler};
use crate::numeric::{integrate_log, log_panels};
use crate::ringmap::{QField, QFloor};

/// `q_{x0}(r) = r^{1-n} ∫_{S(x0, r)} Q dA`.
pub fn spherical_mean_q(q: &QField, x0: &[f64], r: f64, chart: &MetricChart) -> Result<f64> {
    let s = SphereSampler::new(chart, x0)?.integrate(r, |x| q.eval(x))?;
    Ok(s / r.powi(chart.dim() as i32 - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivergenceVerdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct DivergenceReport {
    pub p: f64,
    pub delta: f64,
    /// Decreasing radii.
    pub ladder: Vec<f64>,
    /// `T(ε) = ∫_ε^δ dr / (r^{(n-1)/(p-1)} q(r)^{1/(p-1)})`.
    pub values: Vec<f64>,
    pub verdict: DivergenceVerdict,
}

impl DivergenceReport {
    /// `eps,T`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "T"])?;
        for (e, t) in self.ladder.iter().zip(&self.values) {
            w.write_record(&[format!("{e:e}"), format!("{t:.12e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tracks `T(ε)` down the ladder with Q floored at 1.
///
/// Divergent when the per-halving increments of `T` shrink by at most 20%
/// from rung to rung over the last three rungs; Convergent when `T` moves by
/// at most 1% over the last three rungs.
pub fn check_divergence_criterion(
    q: &QField,
    x0: &[f64],
    p: f64,
    delta: f64,
    ladder: &[f64],
    chart: &MetricChart,
) -> Result<DivergenceReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let ladder = sorted_ladder(ladder, 4)?;
    ensure!(
        ladder[0] <= delta,
        Precondition,
        "ladder starts at {} above δ = {delta}",
        ladder[0]
    );
    let q = q.clone().with_floor(QFloor::One);
    let n = chart.dim() as f64;
    let sampler = SphereSampler::new(chart, x0)?;
    let integrand = |r: f64| -> Result<f64> {
        let qm = sampler.integrate(r, |x| q.eval(x))? / r.powf(n - 1.0);
        if !(qm > 0.0) || !qm.is_finite() {
            return Err(Error::Domain(format!("spherical mean q({r}) = {qm} cannot be inverted")));
        }
        Ok(r.powf(-(n - 1.0) / (p - 1.0)) * qm.powf(-1.0 / (p - 1.0)))
    };
    let mut bounds = vec![delta];
    bounds.extend(&ladder);
    let pieces = bounds
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[1], w[0]);
            if b <= a {
                return Ok(0.0);
            }
            let mut err = None;
            let v = integrate_log(a, b, log_panels(a, b, 8), |r| match integrand(r) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            err.map_or(Ok(v), Err)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values: Vec<f64> = pieces
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();

    let k = values.len();
    // increments per halving of ε
    let inc: Vec<f64> = (1..k)
        .map(|i| (values[i] - values[i - 1]) / (ladder[i - 1] / ladder[i]).log2())
        .collect();
    let tail = &inc[inc.len().saturating_sub(3)..];
    let prev = &inc[inc.len().saturating_sub(4)..];
    let sustained = tail.len() == 3 && prev.windows(2).all(|w| w[1] >= 0.8 * w[0] && w[1] > 0.0);
    let cauchy = values[k - 1] > 0.0 && (values[k - 1] - values[k - 4]) / values[k - 1] <= 0.01;
    let verdict = if cauchy {
        DivergenceVerdict::Convergent
    } else if sustained {
        DivergenceVerdict::Divergent
    } else {
        DivergenceVerdict::Inconclusive
    };
    Ok(DivergenceReport {
        p,
        delta,
        ladder,
        values,
        verdict,
    })
}
