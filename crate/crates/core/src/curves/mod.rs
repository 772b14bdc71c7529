//! Polyline curves, line integrals and seeded samples of curve families.

mod curve;
mod family;
mod io;

pub(crate) use curve::for_each_piece;
pub use curve::{curve_length, line_integral, DiscreteCurve};
pub use family::{
    default_step, generate_annulus_family, generate_annulus_family_with_step, generate_connecting_family,
    point_on, pushforward, truncate_radially, CurveFamily, PointMap, Provenance,
};
pub use io::{read_family_csv, write_family_csv};
