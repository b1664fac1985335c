//! Field arithmetic and the degree-2 polynomial toolkit.

pub mod accept;
pub mod field;
pub mod poly;

pub use accept::{acceptable, Acceptability};
pub use field::{context_field, with_field, Field, Scalar};
pub use poly::{QuadPoly, UniPoly};
