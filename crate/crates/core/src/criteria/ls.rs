use std::io::Write;

use log::warn;

use crate::criteria::fmo::sorted_ladder;
use crate::error::{ensure, Error, Result};
use crate::geometry::{CenteredDistance, GeodesicAnnulus, GridDomain, MetricChart};
use crate::modulus::Sampling;
use crate::numeric::pairwise_sum;
use crate::ringmap::QField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsVerdict {
    Pass,
    Fail,
    /// `‖Q‖_{L^s}` diverges near `x0`.
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsRow {
    pub eps: f64,
    /// `I = log(ε0/ε)`.
    pub i: f64,
    /// `(∫_{ε<d<ε0} d^{-p s'} dv)^{1/s'}`.
    pub radial_factor: f64,
    /// `‖Q‖ · radial factor`, an upper bound on `F`.
    pub f_bound: f64,
    /// `F = ∫_{ε<d<ε0} Q d^{-p} dv` computed directly.
    pub f: f64,
    /// `f_bound / I^p`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct LsReport {
    pub p: f64,
    pub s: f64,
    pub eps0: f64,
    /// `‖Q‖_{L^s(B(x0, ε0))}` by grid quadrature; infinite when not applicable.
    pub q_norm: f64,
    /// Ratios of consecutive dyadic-shell contributions to `∫ Q^s` toward `x0`.
    pub shell_ratios: Vec<f64>,
    pub rows: Vec<LsRow>,
    pub verdict: LsVerdict,
}

impl LsReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "I", "radial_factor", "F_bound", "F", "ratio"])?;
        for r in &self.rows {
            w.write_record(&[
                format!("{:e}", r.eps),
                format!("{:.9e}", r.i),
                format!("{:.9e}", r.radial_factor),
                format!("{:.9e}", r.f_bound),
                format!("{:.9e}", r.f),
                format!("{:.9e}", r.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

const SHELLS: usize = 24;

/// Hölder route with `ψ(t) = 1/t`: `F(ε) ≤ ‖Q‖_{L^s} (∫ d^{-p s'})^{1/s'}`
/// with `s' = s/(s-1)`; passes when the bound over `I^p` decreases along the
/// whole ladder.
#[allow(clippy::too_many_arguments)]
pub fn check_ls_criterion(
    q: &QField,
    x0: &[f64],
    p: f64,
    s: f64,
    eps0: f64,
    ladder: &[f64],
    chart: &MetricChart,
    sampling: &Sampling,
) -> Result<LsReport> {
    let n = chart.dim() as f64;
    ensure!(
        p > 1.0 && p < n,
        Precondition,
        "the L^s criterion needs 1 < p < n, got p = {p}, n = {n}"
    );
    ensure!(
        s >= n / (n - p) * (1.0 - 1e-12),
        Precondition,
        "unsupported exponent: s = {s} is below n/(n-p) = {}",
        n / (n - p)
    );
    let ladder = sorted_ladder(ladder, 2)?;
    ensure!(ladder[0] < eps0, Precondition, "ladder must lie below ε0 = {eps0}");

    // integrability of Q^s near x0 from dyadic shells
    let qs = |x: &[f64]| q.eval(x).powf(s);
    let mut shells = Vec::with_capacity(SHELLS);
    for k in 0..SHELLS {
        let b = eps0 * 0.5f64.powi(k as i32);
        let a = 0.5 * b;
        let ann = GeodesicAnnulus::new(chart, x0, a, b)?;
        shells.push(ann.integrate(|_| 1.0, qs)?);
    }
    let shell_ratios: Vec<f64> = shells.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &shell_ratios[shell_ratios.len() - 5..];
    let divergent = shells.iter().any(|v| !v.is_finite()) || tail.iter().all(|r| *r >= 0.95);
    if divergent {
        warn!("Q^{s} is not integrable at {x0:?}: shell ratios {tail:?}");
        return Ok(LsReport {
            p,
            s,
            eps0,
            q_norm: f64::INFINITY,
            shell_ratios,
            rows: Vec::new(),
            verdict: LsVerdict::NotApplicable,
        });
    }

    let grid = GridDomain::around(chart, x0, eps0, sampling.resolution_for(chart.dim()))?;
    let dist = CenteredDistance::new(chart, x0)?;
    let l = grid.lattice();
    let mut c = vec![0.0; l.dim()];
    let mut parts = Vec::new();
    let mut clamped = 0;
    for idx in 0..l.num_cells() {
        l.center(idx, &mut c);
        if dist.at(&c) < eps0 {
            let v = qs(&c);
            if v.is_finite() {
                parts.push(v * grid.cell_volume(idx));
            } else {
                clamped += 1;
            }
        }
    }
    if clamped > 0 {
        warn!("{clamped} singular cells dropped from the L^{s} norm of Q");
    }
    let q_norm = pairwise_sum(&parts).powf(1.0 / s);

    let sp = s / (s - 1.0);
    let rows = ladder
        .iter()
        .map(|&eps| {
            let ann = GeodesicAnnulus::new(chart, x0, eps, eps0)?;
            let radial = ann.integrate(|t| t.powf(-p * sp), |_| 1.0)?.powf(1.0 / sp);
            let f = ann.integrate(|t| t.powf(-p), |x| q.eval(x))?;
            let i = (eps0 / eps).ln();
            let f_bound = q_norm * radial;
            Ok(LsRow {
                eps,
                i,
                radial_factor: radial,
                f_bound,
                f,
                ratio: f_bound / i.powf(p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| r.f > r.f_bound * 1.01) {
        return Err(Error::Domain("Hölder bound below the direct F: quadrature is unresolved".into()));
    }
    let decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(LsReport {
        p,
        s,
        eps0,
        q_norm,
        shell_ratios,
        rows,
        verdict: if decreasing { LsVerdict::Pass } else { LsVerdict::Fail },
    })
}
