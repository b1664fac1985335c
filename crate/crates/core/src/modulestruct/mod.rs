//! Laurent-module structure of representable automorphisms: closures, stratifications,
//! quotient strata and representative adjustment.

pub mod closure;
pub mod quotient;
pub mod span;
pub mod strat;

pub use closure::{closure, Closure};
pub use quotient::{adjust_reps, check_adjusted, finite_quotient_matrix, quotient_strata};
pub use span::Echelon;
pub use strat::{build_strat_periodic, is_semi_good, shift_copies, verify_strat, Dim, Stratification, Stratum, TailRule};
