//! Exact factorization of automorphisms of countable-dimensional spaces into
//! products of quadratic automorphisms, with a finite-group oracle.

pub mod algebra;
pub mod error;
pub mod factorize;
pub mod glsearch;
pub mod linalg;
pub mod modulestruct;
pub mod opcore;

pub use error::{Error, Refusal, Result};
