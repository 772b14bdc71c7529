use std::io::Write;

use log::warn;
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::geometry::{CenteredDistance, GridDomain, MetricChart, SphereSampler};
use crate::numeric::{fit_slope, median, pairwise_sum};
use crate::ringmap::QField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OscillationVerdict {
    Fmo,
    NotFmo,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct OscillationReport {
    pub ladder: Vec<f64>,
    /// `φ̄_ε`, the mean of Q over `B(x0, ε)`.
    pub means: Vec<f64>,
    /// `m(ε) = (1/v(B)) ∫_B |Q - φ̄_ε| dv`.
    pub oscillations: Vec<f64>,
    /// Slope of `log m` against `log(1/ε)`; 0 when every `m` vanishes.
    pub slope: f64,
    pub verdict: OscillationVerdict,
    /// Cells whose sample was non-finite and was replaced by the largest finite sample.
    pub clamped_cells: usize,
}

impl OscillationReport {
    /// `eps,mean,oscillation`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "mean", "oscillation"])?;
        for i in 0..self.ladder.len() {
            w.write_record(&[
                format!("{:e}", self.ladder[i]),
                format!("{:.9e}", self.means[i]),
                format!("{:.9e}", self.oscillations[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ladder sorted by decreasing radius, validated positive.
pub(crate) fn sorted_ladder(ladder: &[f64], min_len: usize) -> Result<Vec<f64>> {
    ensure!(
        ladder.len() >= min_len,
        Precondition,
        "ε ladder has {} rungs, at least {min_len} needed",
        ladder.len()
    );
    ensure!(
        ladder.iter().all(|e| *e > 0.0 && e.is_finite()),
        Precondition,
        "ε ladder values must be positive"
    );
    let mut l = ladder.to_vec();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok(l)
}

/// Mean and mean oscillation of Q over each ball `B(x0, ε)`.
///
/// Each rung is sampled on its own grid of `grid`'s resolution covering the
/// ball, so every ball gets the same number of cells.
pub fn check_fmo(q: &QField, x0: &[f64], grid: &GridDomain, ladder: &[f64]) -> Result<OscillationReport> {
    let ladder = sorted_ladder(ladder, 3)?;
    let chart = grid.chart();
    let res = grid.lattice().resolution()[0];
    let dist = CenteredDistance::new(chart, x0)?;
    let rungs = ladder
        .par_iter()
        .map(|&eps| ball_oscillation(q, chart, &dist, x0, eps, res))
        .collect::<Result<Vec<_>>>()?;
    let clamped_cells = rungs.iter().map(|r| r.2).sum::<usize>();
    if clamped_cells > 0 {
        warn!("{clamped_cells} non-finite Q samples clamped to the largest finite sample of their ball");
    }
    let means: Vec<f64> = rungs.iter().map(|r| r.0).collect();
    let oscillations: Vec<f64> = rungs.iter().map(|r| r.1).collect();

    let pos: Vec<(f64, f64)> = ladder
        .iter()
        .zip(&oscillations)
        .filter(|(_, m)| **m > 0.0)
        .map(|(e, m)| ((1.0 / e).ln(), m.ln()))
        .collect();
    let slope = if pos.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
        fit_slope(&xs, &ys)
    } else {
        0.0
    };
    let k = oscillations.len().min(5);
    let head = median(&oscillations[..k]);
    let tail = &oscillations[oscillations.len() - k..];
    let tail_max = tail.iter().cloned().fold(0.0, f64::max);
    let growing = tail.windows(2).all(|w| w[1] >= w[0]);
    let verdict = if tail_max <= 10.0 * head && slope <= 0.05 {
        OscillationVerdict::Fmo
    } else if slope >= 0.5 && growing {
        OscillationVerdict::NotFmo
    } else {
        OscillationVerdict::Inconclusive
    };
    Ok(OscillationReport {
        ladder,
        means,
        oscillations,
        slope,
        verdict,
        clamped_cells,
    })
}

fn ball_oscillation(
    q: &QField,
    chart: &MetricChart,
    dist: &CenteredDistance,
    x0: &[f64],
    eps: f64,
    res: usize,
) -> Result<(f64, f64, usize)> {
    // the chart box of a geodesic ball need not be the Euclidean one
    let half = if chart.is_euclidean() {
        eps
    } else {
        SphereSampler::with_distance(chart, dist.clone())
            .nodes(eps)?
            .iter()
            .flat_map(|x| x.iter().zip(x0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
            * 1.05
    };
    let g = GridDomain::around(chart, x0, half, res)?;
    let l = g.lattice();
    let mut c = vec![0.0; l.dim()];
    let mut samples = Vec::new();
    let mut vols = Vec::new();
    for idx in 0..l.num_cells() {
        l.center(idx, &mut c);
        if dist.at(&c) < eps && g.cell_volume(idx) > 0.0 {
            samples.push(q.eval(&c));
            vols.push(g.cell_volume(idx));
        }
    }
    ensure!(!samples.is_empty(), Domain, "ball of radius {eps} contains no grid cell");
    let finite_max = samples.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut clamped = 0;
    for s in &mut samples {
        if !s.is_finite() {
            *s = finite_max;
            clamped += 1;
        }
    }
    let vol = pairwise_sum(&vols);
    let wq: Vec<f64> = samples.iter().zip(&vols).map(|(s, v)| s * v).collect();
    let mean = pairwise_sum(&wq) / vol;
    let dev: Vec<f64> = samples.iter().zip(&vols).map(|(s, v)| (s - mean).abs() * v).collect();
    Ok((mean, pairwise_sum(&dev) / vol, clamped))
}
