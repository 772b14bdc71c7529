use crate::curves::CurveFamily;
use crate::error::{Error, Result};
use crate::geometry::GridDomain;
use crate::modulus::{compute_modulus_with, ModulusResult, SolverOptions};

/// Curve `curve` of the first family contains curve `sub` of the second as
/// the vertex range starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubcurveLink {
    pub curve: usize,
    pub sub: usize,
    pub start: usize,
}

/// Construction-time witness that every curve of one family has a subcurve
/// in another.
#[derive(Clone, Debug, Default)]
pub struct MinorizationCertificate {
    pub links: Vec<SubcurveLink>,
}

impl MinorizationCertificate {
    /// Curve `i` contains curve `i` as a prefix (truncation, or equal families).
    pub fn prefixes(count: usize) -> Self {
        MinorizationCertificate {
            links: (0..count).map(|i| SubcurveLink { curve: i, sub: i, start: 0 }).collect(),
        }
    }

    /// Checks that every curve of `f1` is linked and every link holds exactly.
    pub fn verify(&self, f1: &CurveFamily, f2: &CurveFamily) -> Result<()> {
        let mut covered = vec![false; f1.len()];
        for l in &self.links {
            if l.curve >= f1.len() || l.sub >= f2.len() {
                return Err(Error::Certificate(format!("link {l:?} points past the families")));
            }
            let (c, s) = (f1.curve(l.curve), f2.curve(l.sub));
            let nv = s.num_vertices();
            if l.start + nv > c.num_vertices() || c.coords()[l.start * c.dim()..(l.start + nv) * c.dim()] != *s.coords() {
                return Err(Error::Certificate(format!(
                    "curve {} of the second family is not a subcurve of curve {} at vertex {}",
                    l.sub, l.curve, l.start
                )));
            }
            covered[l.curve] = true;
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::Certificate(format!("curve {i} of the first family has no linked subcurve")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MinorizationReport {
    pub m1: ModulusResult,
    pub m2: ModulusResult,
    pub tolerance: f64,
    /// `M_p(Γ1) ≤ M_p(Γ2)·(1 + tolerance)`.
    pub holds: bool,
}

/// Solves both families and checks `M_p(Γ1) ≤ M_p(Γ2)` for `Γ1 > Γ2`.
/// Both programs use the unclipped grid volumes so they share one measure.
pub fn check_minorization(
    family1: &CurveFamily,
    family2: &CurveFamily,
    certificate: &MinorizationCertificate,
    p: f64,
    grid: &GridDomain,
    opts: &SolverOptions,
) -> Result<MinorizationReport> {
    certificate.verify(family1, family2)?;
    let opts = SolverOptions {
        clip_to_support: false,
        ..opts.clone()
    };
    let m1 = compute_modulus_with(family1, p, grid, &opts)?;
    let m2 = compute_modulus_with(family2, p, grid, &opts)?;
    let tolerance = 2.0 * opts.gap_tol;
    let holds = m1.value <= m2.value * (1.0 + tolerance);
    Ok(MinorizationReport { m1, m2, tolerance, holds })
}
