//! Chart geometry: metrics, lattices, geodesic distance, spheres and annuli.

mod annulus;
mod chart;
pub mod config;
mod distance;
mod grid;
mod sphere;

pub use chart::{BoxDomain, ConformalFactor, MetricChart, MetricKind, TensorGrid};
pub(crate) use chart::Buf;
pub use distance::{distance_field, geodesic_distance, geodesic_distance_on, DistanceField};
pub use grid::{default_resolution, GridDomain, Lattice};
pub use annulus::{GeodesicAnnulus, RadialProfile};
pub use sphere::{sphere_quadrature, CenteredDistance, SphereRule, SphereSampler};
