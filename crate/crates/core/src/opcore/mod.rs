//! Lazily evaluated operators on countable-dimensional spaces.

pub mod index;
pub mod lazy;
pub mod lincomb;
pub mod orbit;
pub mod repaut;
pub mod report;
pub mod rule;
pub mod window;

pub use index::BasisIndex;
pub use lazy::{check_annihilated, check_inverse, equal_on_window, equal_on_window_named, LazyOp, Witness};
pub use lincomb::LinComb;
pub use orbit::{cyclic_window_cert, express_in_orbit_basis, CyclicReport, OrbitCoeffs, OrbitSolver};
pub use repaut::{Action, BlockKind, FiniteBlock, PeriodicBlock, RepAut, RepAutBuilder, ShiftBlock};
pub use report::{CheckReport, Failure, Report};
pub use rule::{
    apply_comb, BlockwiseSpec, Cell, IndexMap, Rule, RuleSpec, StreamCells, StreamMap, StreamShape,
};
pub use window::{Window, WindowSpec};
