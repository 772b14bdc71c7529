//! Test mappings, Q weights and radial profiles, and the ring inequality
//! `M_p(f(Γ(S1, S2, A))) ≤ ∫_A Q η^p(d(x, x0)) dv`.

mod eta;
mod mapping;
mod qfield;
mod verify;

pub use eta::EtaProfile;
pub use mapping::{MapKind, MappingSpec};
pub use qfield::{QField, QFloor};
pub(crate) use verify::{image_modulus, source_modulus};
pub use verify::{
    estimate_minimal_constant_q, eta_battery, modulus_of_continuity, ring_rhs, verify_ring_inequality, EtaCheck,
    MinimalQEstimate, RatioSample, RingReport,
};
