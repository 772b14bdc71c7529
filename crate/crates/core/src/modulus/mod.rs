//! The discrete p-modulus program, its analytic ring oracle and the
//! minorization check.

mod density;
mod minorization;
mod oracle;
mod sampling;
mod solver;

pub use density::DensityField;
pub use minorization::{check_minorization, MinorizationCertificate, MinorizationReport, SubcurveLink};
pub use oracle::{annulus_modulus_oracle, extremal_density, extremal_exponent, extremal_normalizer};
pub use sampling::Sampling;
pub use solver::{compute_modulus, compute_modulus_with, IterationRecord, ModulusResult, SolverOptions};
