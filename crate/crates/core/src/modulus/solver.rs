use std::collections::VecDeque;
use std::io::Write;
use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;

use crate::curves::{for_each_piece, CurveFamily};
use crate::error::{Error, Result};
use crate::geometry::{GeodesicAnnulus, GridDomain, Lattice};
use crate::modulus::DensityField;
use crate::numeric::{pairwise_sum, Power};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative duality gap `(P - D) / P` at which iteration stops.
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Clip cell volumes to the family's declared support region.
    pub clip_to_support: bool,
    /// Subsamples per axis when measuring the clipped fraction of a cell.
    pub support_subsamples: usize,
    /// Nonmonotone line-search memory.
    pub memory: usize,
    /// Keep one history record every this many iterations (0 = none).
    pub history_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-4,
            max_iter: 100_000,
            clip_to_support: true,
            support_subsamples: 6,
            memory: 10,
            history_every: 1,
        }
    }
}

impl SolverOptions {
    pub fn with_gap_tol(mut self, tol: f64) -> Self {
        self.gap_tol = tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Best certified primal energy so far.
    pub objective: f64,
    /// `max(0, 1 - min_γ ∫_γ ρ)` for the unscaled dual-derived density.
    pub max_violation: f64,
    pub duality_gap: f64,
}

/// Solution of the discrete modulus program.
#[derive(Clone, Debug)]
pub struct ModulusResult {
    /// `Σ v_c ρ_c^p` of the returned admissible density: an upper bound on
    /// the discrete optimum and an estimate of `M_p` of the sampled family.
    pub value: f64,
    pub density: DensityField,
    pub p: f64,
    /// Relative gap between `value` and `dual_value`.
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best dual objective: a lower bound on the discrete optimum.
    pub dual_value: f64,
    pub min_line_integral: f64,
    pub history: Vec<IterationRecord>,
}

impl ModulusResult {
    fn empty(grid: &GridDomain, p: f64) -> Self {
        ModulusResult {
            value: 0.0,
            density: DensityField::zero(Arc::new(grid.clone())),
            p,
            duality_gap: 0.0,
            iterations: 0,
            converged: true,
            dual_value: 0.0,
            min_line_integral: f64::INFINITY,
            history: Vec::new(),
        }
    }

    /// Writes `iteration,objective,max_violation,duality_gap` rows.
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "objective", "max_violation", "duality_gap"])?;
        for r in &self.history {
            w.write_record(&[
                r.iteration.to_string(),
                format!("{:.12e}", r.objective),
                format!("{:.6e}", r.max_violation),
                format!("{:.6e}", r.duality_gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Constraint matrix restricted to the cells the family visits.
struct Program {
    m: usize,
    /// column -> grid cell
    cells: Vec<usize>,
    vol: Vec<f64>,
    row_ptr: Vec<usize>,
    row_col: Vec<u32>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_row: Vec<u32>,
    col_val: Vec<f64>,
    /// on-grid metric length of each curve
    lengths: Vec<f64>,
}

struct Eval {
    g: f64,
    grad: Vec<f64>,
    rho: Vec<f64>,
    arho: Vec<f64>,
    energy: f64,
}

impl Program {
    fn assemble(family: &CurveFamily, grid: &GridDomain, volumes: &[f64]) -> Result<Self> {
        let lattice = grid.lattice();
        let chart = grid.chart();
        let rows: Vec<Vec<(usize, f64)>> = family
            .curves()
            .par_iter()
            .map(|c| {
                let mut e: Vec<(usize, f64)> = Vec::new();
                for_each_piece(c, lattice, chart, |cell, l| e.push((cell, l)));
                e.sort_by_key(|x| x.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(e.len());
                for (cell, l) in e {
                    match merged.last_mut() {
                        Some(last) if last.0 == cell => last.1 += l,
                        _ => merged.push((cell, l)),
                    }
                }
                merged
            })
            .collect();

        let mut dropped = 0usize;
        let mut col_of = vec![u32::MAX; lattice.num_cells()];
        let mut cells = Vec::new();
        for row in &rows {
            for &(cell, _) in row {
                if volumes[cell] <= 0.0 {
                    continue;
                }
                if col_of[cell] == u32::MAX {
                    col_of[cell] = cells.len() as u32;
                    cells.push(cell);
                }
            }
        }
        let m = rows.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        let mut lengths = Vec::with_capacity(m);
        for (i, row) in rows.iter().enumerate() {
            let mut len = 0.0;
            for &(cell, l) in row {
                if volumes[cell] <= 0.0 {
                    dropped += 1;
                    continue;
                }
                row_col.push(col_of[cell]);
                row_val.push(l);
                len += l;
            }
            if len <= 0.0 {
                return Err(Error::Precondition(format!(
                    "curve {i} has zero metric length on the grid"
                )));
            }
            lengths.push(len);
            row_ptr.push(row_col.len());
        }
        if dropped > 0 {
            warn!("{dropped} curve pieces fall on zero-volume cells and were ignored");
        }
        let k = cells.len();
        let mut counts = vec![0usize; k + 1];
        for &c in &row_col {
            counts[c as usize + 1] += 1;
        }
        for j in 0..k {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_row = vec![0u32; row_col.len()];
        let mut col_val = vec![0.0; row_col.len()];
        for i in 0..m {
            for e in row_ptr[i]..row_ptr[i + 1] {
                let c = row_col[e] as usize;
                col_row[fill[c]] = i as u32;
                col_val[fill[c]] = row_val[e];
                fill[c] += 1;
            }
        }
        let vol = cells.iter().map(|&c| volumes[c]).collect();
        Ok(Program {
            m,
            cells,
            vol,
            row_ptr,
            row_col,
            row_val,
            col_ptr,
            col_row,
            col_val,
            lengths,
        })
    }

    fn density(&self, lam: &[f64], p: f64, inv: Power) -> Vec<f64> {
        (0..self.cells.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|j| {
                let mut t = 0.0;
                for e in self.col_ptr[j]..self.col_ptr[j + 1] {
                    t += self.col_val[e] * lam[self.col_row[e] as usize];
                }
                if t > 0.0 {
                    inv.apply(t / (p * self.vol[j]))
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn apply(&self, rho: &[f64]) -> Vec<f64> {
        (0..self.m)
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let mut s = 0.0;
                for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.row_val[e] * rho[self.row_col[e] as usize];
                }
                s
            })
            .collect()
    }

    fn energy(&self, rho: &[f64], pw: Power) -> f64 {
        let parts: Vec<f64> = rho
            .par_iter()
            .with_min_len(1024)
            .zip(self.vol.par_iter())
            .map(|(r, v)| if *r > 0.0 { v * pw.apply(*r) } else { 0.0 })
            .collect();
        pairwise_sum(&parts)
    }

    fn eval(&self, lam: &[f64], p: f64, pw: Power, inv: Power) -> Eval {
        let rho = self.density(lam, p, inv);
        let energy = self.energy(&rho, pw);
        let arho = self.apply(&rho);
        let grad: Vec<f64> = arho.iter().map(|a| 1.0 - a).collect();
        let g = pairwise_sum(lam) - (p - 1.0) * energy;
        Eval {
            g,
            grad,
            rho,
            arho,
            energy,
        }
    }
}

/// Volumes of the touched cells clipped to the closed annulus.
fn clipped_volumes(grid: &GridDomain, support: &GeodesicAnnulus, touched: &[usize], sub: usize) -> Vec<f64> {
    let lattice = grid.lattice();
    let n = lattice.dim();
    let mut volumes = grid.volumes().to_vec();
    let fractions: Vec<(usize, f64)> = touched
        .par_iter()
        .map(|&cell| (cell, inside_fraction(lattice, cell, support, sub)))
        .collect();
    let floor = 0.5 / (sub as f64).powi(n as i32);
    for (cell, f) in fractions {
        volumes[cell] *= f.max(floor);
    }
    volumes
}

fn inside_fraction(lattice: &Lattice, cell: usize, support: &GeodesicAnnulus, sub: usize) -> f64 {
    let n = lattice.dim();
    let h = lattice.spacing();
    let c = lattice.center_vec(cell);
    let inside = |x: &[f64]| support.contains_closed(x, 0.0);
    let mut x = c.clone();
    // corners and center inside: treat the whole cell as inside
    let all_corners = (0..(1usize << n)).all(|corner| {
        for k in 0..n {
            x[k] = c[k] + if (corner >> k) & 1 == 1 { 0.5 } else { -0.5 } * h[k];
        }
        inside(&x)
    });
    if all_corners && inside(&c) {
        return 1.0;
    }
    let total = sub.pow(n as u32);
    let mut hits = 0usize;
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        for k in 0..n {
            x[k] = c[k] + ((idx[k] as f64 + 0.5) / sub as f64 - 0.5) * h[k];
        }
        if inside(&x) {
            hits += 1;
        }
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < sub {
                break;
            }
            idx[k] = 0;
        }
    }
    hits as f64 / total as f64
}

/// `M_p` of a finite family with default options.
pub fn compute_modulus(family: &CurveFamily, p: f64, grid: &GridDomain) -> Result<ModulusResult> {
    compute_modulus_with(family, p, grid, &SolverOptions::default())
}

/// Minimises `Σ v_c ρ_c^p` subject to `∫_γ ρ ≥ 1` for every curve.
///
/// The dual `max_{λ≥0} Σλ - (p-1) Σ v_c ρ_c(λ)^p` with
/// `ρ_c(λ) = ((Aᵀλ)_c / (p v_c))^{1/(p-1)}` is maximised by spectral
/// projected gradient with a nonmonotone line search. Each dual iterate
/// yields a primal candidate `ρ(λ) / min_γ (Aρ)_γ`, exactly admissible; the
/// best candidate and best dual value bound the optimum from both sides.
pub fn compute_modulus_with(
    family: &CurveFamily,
    p: f64,
    grid: &GridDomain,
    opts: &SolverOptions,
) -> Result<ModulusResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    if family.dim() != grid.dim() && !family.is_empty() {
        return Err(Error::Precondition(format!(
            "family dimension {} does not match grid dimension {}",
            family.dim(),
            grid.dim()
        )));
    }
    if family.is_empty() {
        return Ok(ModulusResult::empty(grid, p));
    }

    let mut volumes = grid.volumes().to_vec();
    let mut prog = Program::assemble(family, grid, &volumes)?;
    if let (true, Some(support)) = (opts.clip_to_support, family.support()) {
        volumes = clipped_volumes(grid, support, &prog.cells, opts.support_subsamples.max(1));
        prog.vol = prog.cells.iter().map(|&c| volumes[c]).collect();
    }
    let solved_grid = Arc::new(grid.with_volumes(volumes)?);

    let pw = Power::new(p);
    let inv = Power::new(1.0 / (p - 1.0));
    let m = prog.m;
    let ones = vec![1.0; m];

    // uniform admissible start ρ ≡ 1/ℓ_min on the visited cells
    let lmin = prog.lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let uniform = vec![1.0 / lmin; prog.cells.len()];
    let mut best_p = prog.energy(&uniform, pw);
    let mut best_rho = uniform;

    // optimal multiple of λ = 1
    let e1 = prog.eval(&ones, p, pw, inv).energy;
    let c = (m as f64 / (p * e1)).powf(p - 1.0);
    let mut lam = vec![c; m];
    let mut st = prog.eval(&lam, p, pw, inv);
    let mut best_g = st.g.max(0.0);

    let consider = |e: &Eval, best_p: &mut f64, best_rho: &mut Vec<f64>| {
        let mu = e.arho.iter().cloned().fold(f64::INFINITY, f64::min);
        if mu > 0.0 {
            let cand = e.energy / pw.apply(mu);
            if cand < *best_p {
                *best_p = cand;
                *best_rho = e.rho.iter().map(|r| r / mu).collect();
            }
        }
    };
    consider(&st, &mut best_p, &mut best_rho);
    best_g = best_g.max(st.g);

    let gap = |bp: f64, bg: f64| ((bp - bg) / bp).max(0.0);
    let mut history = Vec::new();
    let record = |it: usize, e: &Eval, bp: f64, bg: f64, history: &mut Vec<IterationRecord>| {
        if opts.history_every > 0 && it.is_multiple_of(opts.history_every) {
            let mu = e.arho.iter().cloned().fold(f64::INFINITY, f64::min);
            history.push(IterationRecord {
                iteration: it,
                objective: bp,
                max_violation: (1.0 - mu).max(0.0),
                duality_gap: gap(bp, bg),
            });
        }
    };
    record(0, &st, best_p, best_g, &mut history);

    let mut recent: VecDeque<f64> = VecDeque::with_capacity(opts.memory.max(1));
    recent.push_back(st.g);
    let (alpha_min, alpha_max) = (1e-30, 1e30);
    let mut alpha = {
        let dmax = lam
            .iter()
            .zip(&st.grad)
            .map(|(l, g)| ((l + g).max(0.0) - l).abs())
            .fold(0.0, f64::max);
        if dmax > 0.0 {
            (1.0 / dmax).clamp(alpha_min, alpha_max)
        } else {
            1.0
        }
    };
    let mut iterations = 0;
    let mut converged = gap(best_p, best_g) <= opts.gap_tol;
    let mut trial = vec![0.0; m];
    let mut d = vec![0.0; m];

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut gd = 0.0;
        for i in 0..m {
            d[i] = (lam[i] + alpha * st.grad[i]).max(0.0) - lam[i];
            gd += st.grad[i] * d[i];
        }
        if gd <= 0.0 {
            debug!("projected gradient vanished at iteration {iterations}");
            break;
        }
        let gmax = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let next = loop {
            for i in 0..m {
                trial[i] = lam[i] + t * d[i];
            }
            let e = prog.eval(&trial, p, pw, inv);
            consider(&e, &mut best_p, &mut best_rho);
            best_g = best_g.max(e.g);
            if e.g >= gmax + 1e-4 * t * gd || t < 1e-12 {
                break e;
            }
            // safeguarded quadratic backtracking
            let denom = 2.0 * (st.g + t * gd - e.g);
            let tq = if denom > 0.0 { gd * t * t / denom } else { 0.5 * t };
            t = tq.clamp(0.1 * t, 0.5 * t);
        };
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..m {
            let s = trial[i] - lam[i];
            ss += s * s;
            sy += s * (next.grad[i] - st.grad[i]);
        }
        alpha = if sy < 0.0 { (ss / -sy).clamp(alpha_min, alpha_max) } else { alpha_max };
        std::mem::swap(&mut lam, &mut trial);
        st = next;
        if recent.len() == opts.memory.max(1) {
            recent.pop_front();
        }
        recent.push_back(st.g);
        record(iterations, &st, best_p, best_g, &mut history);
        converged = gap(best_p, best_g) <= opts.gap_tol;
    }

    let mut values = vec![0.0; grid.num_cells()];
    for (j, &cell) in prog.cells.iter().enumerate() {
        values[cell] = best_rho[j];
    }
    let ar = prog.apply(&best_rho);
    let min_li = ar.iter().cloned().fold(f64::INFINITY, f64::min);
    let density = DensityField::new(solved_grid, values)?;
    let value = prog.energy(&best_rho, pw);
    if !converged {
        warn!(
            "modulus solver stopped after {iterations} iterations with relative gap {:.3e}",
            gap(best_p, best_g)
        );
    }
    Ok(ModulusResult {
        value,
        density,
        p,
        duality_gap: gap(value, best_g),
        iterations,
        converged,
        dual_value: best_g,
        min_line_integral: min_li,
        history,
    })
}
