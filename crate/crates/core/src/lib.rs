// Range checks are written `!(x > a)` so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod condenser;
pub mod criteria;
pub mod curves;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod modulus;
pub mod numeric;
pub mod ringmap;

pub use error::{Error, Result};
