use std::io::Write;

use crate::curves::{generate_connecting_family, CurveFamily, DiscreteCurve};
use crate::error::{ensure, Error, Result};
use crate::geometry::{GridDomain, MetricChart};
use crate::modulus::{compute_modulus_with, Sampling};
use crate::numeric::dist;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoewnerRow {
    pub diam_e: f64,
    pub diam_f: f64,
    pub separation: f64,
    pub modulus: f64,
    /// `M_p · R^{1+p-n} / min(diam E, diam F)`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct LoewnerReport {
    pub p: f64,
    pub radius: f64,
    pub rows: Vec<LoewnerRow>,
    /// `min_i ratio_i`, the empirical `1/C`.
    pub inverse_constant: f64,
    /// Ratio of the first pair after scaling it by 1/2 about `x0`.
    pub rescaled_ratio: f64,
    /// `max / min` of the first pair's ratio and its rescaled ratio.
    pub rescale_spread: f64,
    pub pass: bool,
}

impl LoewnerReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pair", "diam_E", "diam_F", "separation", "modulus", "ratio"])?;
        for (i, r) in self.rows.iter().enumerate() {
            w.write_record(&[
                i.to_string(),
                format!("{:.9e}", r.diam_e),
                format!("{:.9e}", r.diam_f),
                format!("{:.9e}", r.separation),
                format!("{:.9e}", r.modulus),
                format!("{:.9e}", r.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn diameter(c: &DiscreteCurve) -> f64 {
    let vs: Vec<&[f64]> = c.vertices().collect();
    let mut d: f64 = 0.0;
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            d = d.max(dist(vs[i], vs[j]));
        }
    }
    d
}

/// Distance between segments `[a0, a1]` and `[b0, b1]` in any dimension.
fn segment_distance(a0: &[f64], a1: &[f64], b0: &[f64], b1: &[f64]) -> f64 {
    let sub = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(u, v)| u - v).collect() };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(u, v)| u * v).sum() };
    let (u, v, w) = (sub(a1, a0), sub(b1, b0), sub(a0, b0));
    let (a, b, c, d, e) = (dot(&u, &u), dot(&u, &v), dot(&v, &v), dot(&u, &w), dot(&v, &w));
    let den = a * c - b * b;
    let mut s = if den > 1e-300 { ((b * e - c * d) / den).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if c > 0.0 { ((b * s + e) / c).clamp(0.0, 1.0) } else { 0.0 };
    if a > 0.0 {
        s = ((b * t - d) / a).clamp(0.0, 1.0);
    }
    if c > 0.0 {
        t = ((b * s + e) / c).clamp(0.0, 1.0);
    }
    let diff: Vec<f64> = (0..u.len()).map(|k| w[k] + s * u[k] - t * v[k]).collect();
    dot(&diff, &diff).sqrt()
}

/// Smallest distance between two polylines.
pub fn polyline_separation(e: &DiscreteCurve, f: &DiscreteCurve) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..e.num_vertices() - 1 {
        for j in 0..f.num_vertices() - 1 {
            best = best.min(segment_distance(e.vertex(i), e.vertex(i + 1), f.vertex(j), f.vertex(j + 1)));
        }
    }
    best
}

fn pair_ratio(
    e: &DiscreteCurve,
    f: &DiscreteCurve,
    x0: &[f64],
    radius: f64,
    p: f64,
    chart: &MetricChart,
    sampling: &Sampling,
) -> Result<LoewnerRow> {
    let inside = |c: &DiscreteCurve| c.vertices().all(|v| dist(v, x0) <= radius);
    ensure!(inside(e) && inside(f), Precondition, "continua must lie in B(x0, {radius})");
    let separation = polyline_separation(e, f);
    if separation <= 1e-12 * radius {
        return Err(Error::Intersecting(format!("continua are {separation} apart")));
    }
    let grid = GridDomain::around(chart, x0, radius, sampling.resolution_for(chart.dim()))?;
    let step = 0.5 * grid.lattice().min_spacing();
    let fam = generate_connecting_family(e, f, sampling.count, sampling.seed, step, chart)?;
    // keep every curve in the ball; its bent arcs may leave it
    let curves = fam
        .curves()
        .iter()
        .map(|c| {
            if inside(c) {
                Ok(c.clone())
            } else {
                DiscreteCurve::segment(c.first(), c.last(), step)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let fam = CurveFamily::new(fam.dim(), curves, fam.provenance().to_vec(), fam.seed())?;
    let modulus = compute_modulus_with(&fam, p, &grid, &sampling.solver)?.value;
    let (diam_e, diam_f) = (diameter(e), diameter(f));
    let n = chart.dim() as f64;
    Ok(LoewnerRow {
        diam_e,
        diam_f,
        separation,
        modulus,
        ratio: modulus * radius.powf(1.0 + p - n) / diam_e.min(diam_f),
    })
}

/// Empirical constant of `M_p(Γ(E, F)) ≥ (1/C) min(diam E, diam F) / R^{1+p-n}`
/// over the pairs, plus the ratio of the first pair rescaled by 1/2 about `x0`.
pub fn check_loewner_bound(
    pairs: &[(DiscreteCurve, DiscreteCurve)],
    x0: &[f64],
    radius: f64,
    p: f64,
    chart: &MetricChart,
    sampling: &Sampling,
) -> Result<LoewnerReport> {
    ensure!(!pairs.is_empty(), Precondition, "no continuum pairs");
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let rows = pairs
        .iter()
        .map(|(e, f)| pair_ratio(e, f, x0, radius, p, chart, sampling))
        .collect::<Result<Vec<_>>>()?;
    let scale = |c: &DiscreteCurve| {
        c.map_points(|v| v.iter().zip(x0).map(|(a, o)| o + 0.5 * (a - o)).collect())
    };
    let (e0, f0) = &pairs[0];
    let rescaled = pair_ratio(&scale(e0)?, &scale(f0)?, x0, radius, p, chart, sampling)?;
    let inverse_constant = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let (a, b) = (rows[0].ratio, rescaled.ratio);
    let rescale_spread = a.max(b) / a.min(b);
    Ok(LoewnerReport {
        p,
        radius,
        pass: inverse_constant > 0.0 && rescale_spread <= 3.0,
        rows,
        inverse_constant,
        rescaled_ratio: rescaled.ratio,
        rescale_spread,
    })
}
