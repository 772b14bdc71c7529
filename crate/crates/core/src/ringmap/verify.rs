use std::io::Write;

use rayon::prelude::*;

use crate::curves::{generate_annulus_family_with_step, pushforward, CurveFamily, PointMap};
use crate::error::{ensure, Error, Result};
use crate::geometry::{CenteredDistance, GeodesicAnnulus, GridDomain, SphereSampler};
use crate::modulus::{compute_modulus_with, ModulusResult, Sampling};
use crate::numeric::{pairwise_sum, GaussLegendre, Power};
use crate::ringmap::{EtaProfile, MappingSpec, QField};

const NORMALIZATION_TOL: f64 = 1e-6;

/// Source-annulus family at the sampling's step, with the grid it was sized for.
fn source_family(annulus: &GeodesicAnnulus, sampling: &Sampling) -> Result<(CurveFamily, GridDomain)> {
    let (lo, hi) = annulus.bounding_box()?;
    let grid = sampling.grid_around_box(annulus.chart(), &lo, &hi)?;
    let step = 0.5 * grid.lattice().min_spacing();
    let fam = generate_annulus_family_with_step(annulus, sampling.count, sampling.seed, step)?;
    Ok((fam, grid))
}

/// `M_p(Γ)` of the sampled family of `annulus`.
pub(crate) fn source_modulus(annulus: &GeodesicAnnulus, p: f64, sampling: &Sampling) -> Result<ModulusResult> {
    let (fam, grid) = source_family(annulus, sampling)?;
    compute_modulus_with(&fam, p, &grid, &sampling.solver)
}

/// `M_p(f(Γ))` for the sampled family of `annulus`, pushed forward and
/// refined to half a cell of the target grid. Without an explicit grid one is
/// fitted around the image.
pub(crate) fn image_modulus(
    f: &MappingSpec,
    annulus: &GeodesicAnnulus,
    p: f64,
    grid: Option<&GridDomain>,
    sampling: &Sampling,
) -> Result<ModulusResult> {
    let (fam, _) = source_family(annulus, sampling)?;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            let (lo, hi) = match f.image_support(annulus) {
                Some(img) => img.bounding_box()?,
                None => vertex_box(&pushforward(&fam, f, f64::INFINITY)?),
            };
            owned = sampling.grid_around_box(f.target(), &lo, &hi)?;
            &owned
        }
    };
    let image = pushforward(&fam, f, 0.5 * grid.lattice().min_spacing())?;
    compute_modulus_with(&image, p, grid, &sampling.solver)
}

fn vertex_box(fam: &CurveFamily) -> (Vec<f64>, Vec<f64>) {
    let n = fam.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for c in fam.curves() {
        for v in c.vertices() {
            for k in 0..n {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
    }
    (lo, hi)
}

/// `∫_A Q η^p(d(x, x0)) dv`, integrating exactly over each step of `η`.
pub fn ring_rhs(annulus: &GeodesicAnnulus, q: &QField, p: f64, eta: &EtaProfile) -> Result<f64> {
    let pw = Power::new(p);
    let sampler = annulus.sampler();
    let (r1, r2) = (annulus.r1(), annulus.r2());
    let rule = GaussLegendre::new(4);
    let steps: Vec<(f64, f64, f64)> = eta
        .breaks()
        .windows(2)
        .zip(eta.values())
        .filter_map(|(w, v)| {
            let (a, b) = (w[0].max(r1), w[1].min(r2));
            (b > a && *v > 0.0).then_some((a, b, pw.apply(*v)))
        })
        .collect();
    let coarse = steps.len() <= 32;
    let parts = steps
        .par_iter()
        .map(|&(a, b, vp)| {
            let s = if coarse {
                annulus.integrate_between(a, b, |_| 1.0, |x| q.eval(x))?
            } else {
                let mut err = None;
                let v = rule.integrate(a, b, |r| match sampler.integrate(r, |x| q.eval(x)) {
                    Ok(s) => s,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                v
            };
            Ok(vp * s)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&parts))
}

/// Extremal, uniform and two seeded random-step profiles.
pub fn eta_battery(annulus: &GeodesicAnnulus, q: &QField, p: f64, seed: u64) -> Result<Vec<EtaProfile>> {
    let (r1, r2) = (annulus.r1(), annulus.r2());
    Ok(vec![
        EtaProfile::extremal(annulus, q, p)?,
        EtaProfile::uniform(r1, r2)?,
        EtaProfile::random_steps(r1, r2, seed)?,
        EtaProfile::random_steps(r1, r2, seed.wrapping_add(1))?,
    ])
}

#[derive(Clone, Debug)]
pub struct EtaCheck {
    pub label: String,
    pub normalization: f64,
    pub rhs: f64,
    /// LHS / RHS.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct RingReport {
    pub map: String,
    pub p: f64,
    pub r1: f64,
    pub r2: f64,
    /// `M_p(f(Γ))` estimate.
    pub lhs: f64,
    pub lhs_result: ModulusResult,
    pub tolerance: f64,
    pub checks: Vec<EtaCheck>,
    /// Every η passes.
    pub pass: bool,
}

impl RingReport {
    pub fn extremal(&self) -> &EtaCheck {
        &self.checks[0]
    }

    /// `eta,normalization,lhs,rhs,ratio,pass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "normalization", "lhs", "rhs", "ratio", "pass"])?;
        for c in &self.checks {
            w.write_record(&[
                c.label.clone(),
                format!("{:.9}", c.normalization),
                format!("{:.9e}", self.lhs),
                format!("{:.9e}", c.rhs),
                format!("{:.6}", c.ratio),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks `M_p(f(Γ(S1, S2, A))) ≤ ∫_A Q η^p(d(x, x0)) dv` for the default η
/// battery followed by `etas`. The LHS is a lower estimate of the true
/// modulus, so a pass is evidence rather than proof.
#[allow(clippy::too_many_arguments)]
pub fn verify_ring_inequality(
    f: &MappingSpec,
    x0: &[f64],
    q: &QField,
    p: f64,
    r1: f64,
    r2: f64,
    etas: &[EtaProfile],
    grid: Option<&GridDomain>,
    sampling: &Sampling,
) -> Result<RingReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::UnsupportedExponent(p));
    }
    let annulus = GeodesicAnnulus::new(f.source(), x0, r1, r2)?;
    for eta in etas {
        let (b0, b1) = (eta.breaks()[0], *eta.breaks().last().expect("two breaks"));
        ensure!(
            (b0 - r1).abs() <= 1e-9 * r1 && (b1 - r2).abs() <= 1e-9 * r2,
            Precondition,
            "η `{}` is defined on ({b0}, {b1}), not on ({r1}, {r2})",
            eta.label()
        );
        eta.check_normalized(NORMALIZATION_TOL)?;
    }
    let mut profiles = eta_battery(&annulus, q, p, sampling.seed)?;
    profiles.extend_from_slice(etas);

    let lhs_result = image_modulus(f, &annulus, p, grid, sampling)?;
    let lhs = lhs_result.value;
    let tolerance = 2.0 * sampling.solver.gap_tol;
    let checks = profiles
        .iter()
        .map(|eta| {
            let rhs = ring_rhs(&annulus, q, p, eta)?;
            Ok(EtaCheck {
                label: eta.label().to_string(),
                normalization: eta.normalization(),
                rhs,
                ratio: lhs / rhs,
                pass: lhs <= rhs * (1.0 + tolerance),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = checks.iter().all(|c| c.pass);
    Ok(RingReport {
        map: f.label(),
        p,
        r1,
        r2,
        lhs,
        lhs_result,
        tolerance,
        checks,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioSample {
    pub r1: f64,
    pub r2: f64,
    pub image: f64,
    pub source: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct MinimalQEstimate {
    /// `sup M_p(f(Γ)) / M_p(Γ)` over the tested radii.
    pub value: f64,
    pub samples: Vec<RatioSample>,
}

/// Least constant Q consistent with the solved moduli on the given rings.
pub fn estimate_minimal_constant_q(
    f: &MappingSpec,
    x0: &[f64],
    p: f64,
    radii: &[(f64, f64)],
    sampling: &Sampling,
) -> Result<MinimalQEstimate> {
    ensure!(!radii.is_empty(), Precondition, "no radii to test");
    let mut samples = Vec::with_capacity(radii.len());
    for &(r1, r2) in radii {
        let annulus = GeodesicAnnulus::new(f.source(), x0, r1, r2)?;
        let source = source_modulus(&annulus, p, sampling)?.value;
        let image = image_modulus(f, &annulus, p, None, sampling)?.value;
        samples.push(RatioSample {
            r1,
            r2,
            image,
            source,
            ratio: image / source,
        });
    }
    let value = samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(MinimalQEstimate { value, samples })
}

/// `ω(ε) = max_{x ∈ S(x0, ε)} d'(f(x), f(x0))` over the sphere quadrature nodes.
pub fn modulus_of_continuity(f: &MappingSpec, x0: &[f64], eps_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    let y0 = f.apply(x0)?;
    let target = CenteredDistance::new(f.target(), &y0)?;
    let sampler = SphereSampler::new(f.source(), x0)?;
    eps_list
        .iter()
        .map(|&eps| {
            ensure!(eps >= 0.0, Precondition, "radius must be nonnegative, got {eps}");
            if eps == 0.0 {
                return Ok((eps, 0.0));
            }
            let mut w: f64 = 0.0;
            for x in sampler.nodes(eps)? {
                let d = target.at(&f.apply(&x)?);
                if !d.is_finite() {
                    return Err(Error::Domain(format!("target distance undefined at the image of {x:?}")));
                }
                w = w.max(d);
            }
            Ok((eps, w))
        })
        .collect()
}
