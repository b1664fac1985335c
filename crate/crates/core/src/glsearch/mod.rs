//! Exhaustive oracle over `GL_n(F_q)` for small `n` and `q`.

pub mod census;
pub mod enumerate;
pub mod gf;
pub mod membership;
pub mod stable;

pub use census::{census, product_set, Census, DetCount};
pub use enumerate::{enum_annihilated, Budget};
pub use gf::{ClassKey, SmallGl};
pub use membership::{product_membership, PairIndex};
pub use stable::{lambda_stable_search, StableHit};
