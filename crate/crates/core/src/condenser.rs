//! Ball condensers `E = (B(x0, ε0), B̄(x0, ε))`, their p-capacity, and the
//! capacity bound `cap_p f(E) ≤ F(ε, ε0) / I^p(ε, ε0)`.

use std::io::Write;

use crate::curves::generate_annulus_family_with_step;
use crate::criteria::PsiFamily;
use crate::error::{ensure, Result};
use crate::geometry::{GeodesicAnnulus, GridDomain, MetricChart};
use crate::modulus::{compute_modulus_with, ModulusResult, Sampling, SolverOptions};
use crate::numeric::Power;
use crate::ringmap::{image_modulus, MappingSpec, QField};

#[derive(Clone, Debug)]
pub struct Condenser {
    chart: MetricChart,
    center: Vec<f64>,
    eps: f64,
    eps0: f64,
}

impl Condenser {
    pub fn new(chart: &MetricChart, center: &[f64], eps: f64, eps0: f64) -> Result<Self> {
        ensure!(
            0.0 < eps && eps < eps0,
            Precondition,
            "condenser needs 0 < ε < ε0, got ε = {eps}, ε0 = {eps0}"
        );
        // validates the center and the patch radius
        GeodesicAnnulus::new(chart, center, eps, eps0)?;
        Ok(Condenser {
            chart: chart.clone(),
            center: center.to_vec(),
            eps,
            eps0,
        })
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    /// Same host ball with inner radius `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(&self.chart, &self.center, eps, self.eps0)
    }

    /// The ring `ε < d(x, x0) < ε0` between `C` and `∂A`.
    pub fn annulus(&self) -> Result<GeodesicAnnulus> {
        GeodesicAnnulus::new(&self.chart, &self.center, self.eps, self.eps0)
    }
}

/// `cap_p E = M_p(Γ_E)`, with `Γ_E` sampled by curves from `∂C` to `∂A`.
pub fn capacity(cond: &Condenser, p: f64, grid: &GridDomain, count: usize, seed: u64) -> Result<ModulusResult> {
    capacity_with(cond, p, grid, count, seed, &SolverOptions::default())
}

pub fn capacity_with(
    cond: &Condenser,
    p: f64,
    grid: &GridDomain,
    count: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<ModulusResult> {
    let h = grid.lattice().min_spacing();
    let probe: Vec<f64> = cond
        .center
        .iter()
        .enumerate()
        .map(|(k, c)| if k == 0 { c + h } else { *c })
        .collect();
    let cell = cond.chart.segment_length(&cond.center, &probe);
    ensure!(
        cond.eps0 - cond.eps >= cell,
        Precondition,
        "condenser gap {} is below one grid cell ({cell})",
        cond.eps0 - cond.eps
    );
    let fam = generate_annulus_family_with_step(&cond.annulus()?, count, seed, 0.5 * h)?;
    compute_modulus_with(&fam, p, grid, opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma1Row {
    pub eps: f64,
    pub i: f64,
    pub f: f64,
    /// `F / I^p`.
    pub rhs: f64,
    /// `F / I^n`, the alternative normalization.
    pub rhs_n: f64,
    /// `cap_p f(E)` estimate.
    pub lhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Lemma1Report {
    pub map: String,
    pub psi: String,
    pub p: f64,
    pub n: usize,
    pub eps0: f64,
    pub tolerance: f64,
    pub rows: Vec<Lemma1Row>,
    /// `Q` vanishes on every tested annulus, so the bound degenerates to `LHS ≤ tol`.
    pub degenerate_q: bool,
    /// LHS decreases as ε decreases.
    pub lhs_decreasing: bool,
    /// `F/I^p` and `F/I^n` decrease as ε decreases.
    pub ip_ratio_decreasing: bool,
    pub in_ratio_decreasing: bool,
    pub pass: bool,
}

impl Lemma1Report {
    /// `eps,I,F,RHS,LHS,pass` plus the `F/I^n` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "I", "F", "RHS", "LHS", "pass", "F_over_In"])?;
        for r in &self.rows {
            w.write_record(&[
                format!("{:e}", r.eps),
                format!("{:.9e}", r.i),
                format!("{:.9e}", r.f),
                format!("{:.9e}", r.rhs),
                format!("{:.9e}", r.lhs),
                r.pass.to_string(),
                format!("{:.9e}", r.rhs_n),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// For each `ε` checks `cap_p f(E_ε) ≤ F(ε, ε0) / I^p(ε, ε0)` where
/// `E_ε = (B(x0, ε0), B̄(x0, ε))`, `I = ∫_ε^ε0 ψ` and
/// `F = ∫_{ε<d<ε0} Q ψ^p dv`. An empty `eps_list` tests `cond.eps()` only.
pub fn check_lemma1_bound(
    f: &MappingSpec,
    cond: &Condenser,
    q: &QField,
    p: f64,
    psi: &PsiFamily,
    eps_list: &[f64],
    sampling: &Sampling,
) -> Result<Lemma1Report> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(crate::Error::UnsupportedExponent(p));
    }
    let n = cond.chart.dim();
    let pw = Power::new(p);
    let tolerance = 2.0 * sampling.solver.gap_tol;
    let eps_list = if eps_list.is_empty() { vec![cond.eps] } else { eps_list.to_vec() };
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut all_zero = true;
    for &eps in &eps_list {
        let c = cond.with_eps(eps)?;
        let annulus = c.annulus()?;
        let i = psi.normalizer(eps, cond.eps0)?;
        let fv = annulus.integrate(|t| pw.apply(psi.eval(t)), |x| q.eval(x))?;
        ensure!(fv.is_finite(), Domain, "F({eps}, {}) is not finite", cond.eps0);
        all_zero &= fv == 0.0;
        let rhs = fv / pw.apply(i);
        let rhs_n = fv / i.powi(n as i32);
        let lhs = image_modulus(f, &annulus, p, None, sampling)?.value;
        let pass = if fv == 0.0 { lhs <= tolerance } else { lhs <= rhs * (1.0 + tolerance) };
        rows.push(Lemma1Row {
            eps,
            i,
            f: fv,
            rhs,
            rhs_n,
            lhs,
            pass,
        });
    }
    let mut by_eps = rows.clone();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let decreasing = |key: fn(&Lemma1Row) -> f64| by_eps.windows(2).all(|w| key(&w[1]) <= key(&w[0]));
    let pass = rows.iter().all(|r| r.pass);
    Ok(Lemma1Report {
        map: f.label(),
        psi: psi.name().to_string(),
        p,
        n,
        eps0: cond.eps0,
        tolerance,
        degenerate_q: all_zero,
        lhs_decreasing: decreasing(|r| r.lhs),
        ip_ratio_decreasing: decreasing(|r| r.rhs),
        in_ratio_decreasing: decreasing(|r| r.rhs_n),
        rows,
        pass,
    })
}
