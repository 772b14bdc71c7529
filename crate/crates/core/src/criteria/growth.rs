use std::io::Write;

use log::info;
use rayon::prelude::*;

use crate::criteria::fmo::sorted_ladder;
use crate::criteria::PsiFamily;
use crate::error::{ensure, Result};
use crate::geometry::{GeodesicAnnulus, MetricChart};
use crate::numeric::Power;
use crate::ringmap::QField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthRow {
    pub eps: f64,
    /// `F(ε) = ∫_{ε<d<ε0} Q ψ^p dv`.
    pub f: f64,
    /// `I(ε) = ∫_ε^ε0 ψ`.
    pub i: f64,
    /// `F / log log(1/ε)`.
    pub f_over_loglog: f64,
    /// `F / I^p`.
    pub f_over_ip: f64,
    /// `F / I`, the `p = 1` reading of the growth condition.
    pub f_over_i: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub p: f64,
    pub eps0: f64,
    pub rows: Vec<GrowthRow>,
    /// `max / min` of `F / log log(1/ε)` over the ladder (1 when F ≡ 0).
    pub loglog_spread: f64,
    pub loglog_bounded: bool,
    /// `F / I^p` strictly decreasing over the last four rungs (or F ≡ 0).
    pub ratio_decreasing: bool,
    pub pass: bool,
}

impl GrowthReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "F", "I", "F_over_loglog", "F_over_Ip", "F_over_I"])?;
        for r in &self.rows {
            w.write_record(&[
                format!("{:e}", r.eps),
                format!("{:.9e}", r.f),
                format!("{:.9e}", r.i),
                format!("{:.9e}", r.f_over_loglog),
                format!("{:.9e}", r.f_over_ip),
                format!("{:.9e}", r.f_over_i),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// With `ψ(t) = 1/(t log(1/t))^{n/p}` checks that `F(ε)` grows at most like
/// `log log(1/ε)` (spread within a factor 3) and that `F / I^p` decreases
/// over the last four rungs.
pub fn theorem1_growth_check(
    q: &QField,
    x0: &[f64],
    p: f64,
    eps0: f64,
    ladder: &[f64],
    chart: &MetricChart,
) -> Result<GrowthReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(crate::Error::UnsupportedExponent(p));
    }
    let ladder = sorted_ladder(ladder, 6)?;
    ensure!(eps0 < 1.0, Precondition, "ε0 must be below 1 for log(1/t) > 0, got {eps0}");
    ensure!(
        ladder[0] < eps0 && ladder[0] < (-1f64).exp(),
        Precondition,
        "ladder must lie below ε0 and 1/e"
    );
    let psi = PsiFamily::log_power(chart.dim(), p);
    let pw = Power::new(p);
    let rows = ladder
        .par_iter()
        .map(|&eps| {
            let annulus = GeodesicAnnulus::new(chart, x0, eps, eps0)?;
            let i = psi.normalizer(eps, eps0)?;
            let f = annulus.integrate(|t| pw.apply(psi.eval(t)), |x| q.eval(x))?;
            Ok(GrowthRow {
                eps,
                f,
                i,
                f_over_loglog: f / (1.0 / eps).ln().ln(),
                f_over_ip: f / pw.apply(i),
                f_over_i: f / i,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let zero = rows.iter().all(|r| r.f == 0.0);
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.f_over_loglog), hi.max(r.f_over_loglog)));
    let loglog_spread = if zero { 1.0 } else { hi / lo };
    let loglog_bounded = loglog_spread.is_finite() && loglog_spread <= 3.0;
    let tail = &rows[rows.len() - 4..];
    let ratio_decreasing = zero || tail.windows(2).all(|w| w[1].f_over_ip < w[0].f_over_ip);
    let alt = tail.windows(2).all(|w| w[1].f_over_i < w[0].f_over_i);
    info!("growth check: F/I decreasing over the tail under the p = 1 reading: {alt}");
    Ok(GrowthReport {
        p,
        eps0,
        pass: loglog_bounded && ratio_decreasing,
        rows,
        loglog_spread,
        loglog_bounded,
        ratio_decreasing,
    })
}
