//! Factorization constructions and pipelines.

pub mod adjacency;
pub mod certificate;
pub mod classify;
pub mod finite_rank;
pub mod invariant;
pub mod kill;
pub mod pipeline;
pub mod scalar;
pub mod shift_pair;
pub mod transport;
