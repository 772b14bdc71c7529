//! Equicontinuity criteria at a point: finite mean oscillation, the
//! divergence integral, the ψ growth machinery, the `L^s` route, the
//! equicontinuity experiment and the Loewner-type lower bound.

mod divergence;
mod equicontinuity;
mod fmo;
mod growth;
mod loewner;
mod ls;
mod psi;

pub use divergence::{check_divergence_criterion, spherical_mean_q, DivergenceReport, DivergenceVerdict};
pub use equicontinuity::{
    gehring_ratios, run_equicontinuity_experiment, EquicontinuityOptions, EquicontinuityReport, MappingOutcome,
};
pub use fmo::{check_fmo, OscillationReport, OscillationVerdict};
pub use growth::{theorem1_growth_check, GrowthReport, GrowthRow};
pub use loewner::{check_loewner_bound, polyline_separation, LoewnerReport, LoewnerRow};
pub use ls::{check_ls_criterion, LsReport, LsRow, LsVerdict};
pub use psi::{PsiFamily, PsiKind};

/// Geometric ladder `ε0, ε0/2, ...` with `rungs` entries.
pub fn default_ladder(eps0: f64, rungs: usize) -> Vec<f64> {
    crate::numeric::geometric_ladder(eps0, 0.5, rungs)
}
