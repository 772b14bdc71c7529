use std::io::Write;

use log::warn;

use crate::criteria::fmo::sorted_ladder;
use crate::error::{ensure, Result};
use crate::geometry::{GeodesicAnnulus, SphereSampler};
use crate::modulus::Sampling;
use crate::ringmap::{image_modulus, modulus_of_continuity, source_modulus, MappingSpec, QField};
use std::f64::consts::E;

#[derive(Clone, Debug)]
pub struct EquicontinuityOptions {
    /// Rings on which each mapping's minimal constant Q is estimated.
    pub radii: Vec<(f64, f64)>,
    /// Relative slack on the Q budget, absorbing the estimate's error.
    pub q_slack: f64,
    /// Required bound on `sup_f ω_f` at the smallest ε.
    pub sigma: f64,
    /// Declared lower bound on the diameter of the continua the mappings omit.
    pub declared_delta: f64,
    pub sampling: Sampling,
}

impl Default for EquicontinuityOptions {
    fn default() -> Self {
        EquicontinuityOptions {
            radii: vec![(0.5, 0.5 * E)],
            q_slack: 0.05,
            sigma: 1.0,
            declared_delta: 1.0,
            sampling: Sampling::new(2048, 1).with_resolution(192),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MappingOutcome {
    pub map: String,
    pub minimal_q: f64,
    /// Smallest sampled value of the budget on the tested rings.
    pub budget: f64,
    pub included: bool,
    /// `ω_f(ε)` per rung; empty when excluded.
    pub omega: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EquicontinuityReport {
    /// Decreasing radii.
    pub ladder: Vec<f64>,
    pub maps: Vec<MappingOutcome>,
    /// `sup_f ω_f(ε)` over included mappings.
    pub sup_omega: Vec<f64>,
    pub decreasing: bool,
    pub sigma: f64,
    pub declared_delta: f64,
    pub pass: bool,
}

impl EquicontinuityReport {
    /// `eps,sup_omega` followed by one `omega_<map>` column per included mapping.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let included: Vec<&MappingOutcome> = self.maps.iter().filter(|m| m.included).collect();
        let mut header = vec!["eps".to_string(), "sup_omega".to_string()];
        header.extend(included.iter().map(|m| format!("omega_{}", m.map)));
        w.write_record(&header)?;
        for (i, e) in self.ladder.iter().enumerate() {
            let mut row = vec![format!("{e:e}"), format!("{:.9e}", self.sup_omega[i])];
            row.extend(included.iter().map(|m| format!("{:.9e}", m.omega[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Estimates each mapping's minimal constant Q, drops those over the budget,
/// and tracks `sup_f ω_f(ε)` down the ladder.
pub fn run_equicontinuity_experiment(
    family: &[MappingSpec],
    q_budget: &QField,
    x0: &[f64],
    p: f64,
    ladder: &[f64],
    opts: &EquicontinuityOptions,
) -> Result<EquicontinuityReport> {
    ensure!(!family.is_empty(), Precondition, "empty mapping family");
    ensure!(!opts.radii.is_empty(), Precondition, "no rings for the Q estimate");
    let ladder = sorted_ladder(ladder, 2)?;
    let chart = family[0].source();
    let rings = opts
        .radii
        .iter()
        .map(|&(r1, r2)| GeodesicAnnulus::new(chart, x0, r1, r2))
        .collect::<Result<Vec<_>>>()?;
    let sources = rings
        .iter()
        .map(|a| source_modulus(a, p, &opts.sampling).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let sampler = SphereSampler::new(chart, x0)?;
    let mut budget = f64::INFINITY;
    for a in &rings {
        for r in [a.r1(), 0.5 * (a.r1() + a.r2()), a.r2()] {
            for x in sampler.nodes(r)? {
                budget = budget.min(q_budget.eval(&x));
            }
        }
    }

    let mut maps = Vec::with_capacity(family.len());
    for f in family {
        ensure!(f.source().dim() == chart.dim(), Precondition, "mappings differ in dimension");
        let mut minimal_q = f64::NEG_INFINITY;
        for (a, src) in rings.iter().zip(&sources) {
            let img = image_modulus(f, a, p, None, &opts.sampling)?.value;
            minimal_q = minimal_q.max(img / src);
        }
        let included = minimal_q <= budget * (1.0 + opts.q_slack);
        let omega = if included {
            modulus_of_continuity(f, x0, &ladder)?.into_iter().map(|(_, w)| w).collect()
        } else {
            warn!(
                "excluding {}: estimated minimal Q {minimal_q:.4} exceeds the budget {budget:.4}",
                f.label()
            );
            Vec::new()
        };
        maps.push(MappingOutcome {
            map: f.label(),
            minimal_q,
            budget,
            included,
            omega,
        });
    }
    let sup_omega: Vec<f64> = (0..ladder.len())
        .map(|i| {
            maps.iter()
                .filter(|m| m.included)
                .map(|m| m.omega[i])
                .fold(0.0, f64::max)
        })
        .collect();
    let any = maps.iter().any(|m| m.included);
    let decreasing = sup_omega.windows(2).all(|w| w[1] < w[0]);
    let pass = any && decreasing && *sup_omega.last().expect("non-empty ladder") <= opts.sigma;
    Ok(EquicontinuityReport {
        ladder,
        maps,
        sup_omega,
        decreasing,
        sigma: opts.sigma,
        declared_delta: opts.declared_delta,
        pass,
    })
}

/// `ω(ε)/ε` per rung: unbounded growth as `ε → 0` rules out a Lipschitz bound at `x0`.
pub fn gehring_ratios(omega: &[(f64, f64)]) -> Vec<f64> {
    omega.iter().map(|(e, w)| w / e).collect()
}
