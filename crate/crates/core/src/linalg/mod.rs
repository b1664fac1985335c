//! Exact dense linear algebra over a declared field.

pub mod finite_rank;
pub mod frobenius;
pub mod mat;

pub use finite_rank::{compress, induced_det, Compression};
pub use frobenius::{decompose, frobenius, invariant_factors, poly_apply, restrict, vector_minpoly, similar, similar_to_inverse, CyclicPiece};
pub use mat::{Mat, Vector};
