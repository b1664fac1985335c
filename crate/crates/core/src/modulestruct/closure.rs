use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::modulestruct::span::Echelon;
use crate::opcore::{BlockKind, LazyOp, LinComb, OrbitSolver, RepAut};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Closure {
    /// Basis of the generated submodule (stable under `u` and `u⁻¹`).
    Finite(Vec<LinComb>),
    /// A seed whose orbit stayed independent inside shift blocks up to the bound.
    FreeDetected(LinComb),
}

/// Smallest `u`- and `u⁻¹`-stable subspace containing `seed`, if it has dimension ≤ `bound`.
pub fn closure(u: &RepAut, seed: &[LinComb], bound: usize) -> Result<Closure> {
    let mut span = Echelon::new();
    let mut queue: VecDeque<LinComb> = seed.iter().cloned().collect();
    let mut basis = Vec::new();
    while let Some(x) = queue.pop_front() {
        if !span.insert(&x) {
            continue;
        }
        basis.push(x.clone());
        if basis.len() > bound {
            return free_witness(u, seed, bound);
        }
        queue.push_back(u.apply_comb(&x)?);
        let mut y = LinComb::zero();
        for (i, c) in x.iter() {
            y.add_scaled(&u.apply_inverse(i)?, c);
        }
        queue.push_back(y);
    }
    Ok(Closure::Finite(basis))
}

fn free_witness(u: &RepAut, seed: &[LinComb], bound: usize) -> Result<Closure> {
    let op = LazyOp::from_aut(u);
    for x in seed {
        let touches_shift = x.support().any(|i| matches!(u.kind(i), Ok(BlockKind::Shift(_))));
        if !touches_shift || x.is_zero() {
            continue;
        }
        let mut s = OrbitSolver::for_op(&op, x.clone())?;
        s.grow_to(bound)?;
        if s.dependence().is_none() {
            return Ok(Closure::FreeDetected(x.clone()));
        }
    }
    Err(Error::BoundExceeded(bound))
}
