use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::algebra::{Field, QuadPoly};
use crate::error::{Error, Result};
use crate::factorize::shift_pair::{pair_index, shift_pair, PairFactor};
use crate::opcore::{
    cyclic_window_cert, BasisIndex, CyclicReport, LazyOp, LinComb, OrbitSolver, RepAut, Rule,
};

/// A `v`-cyclic summand: the orbit of `generator` spans the basis vectors of `blocks`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub generator: LinComb,
    pub blocks: Vec<Arc<str>>,
}

/// One shift-pair factor transported onto the cyclic components of `base`.
///
/// On a component with generator `c`, the correspondence `T` sends `(ab)^k(x₁)` to `v^k(c)`;
/// the factor is `T a T⁻¹` (or `T b T⁻¹`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSpec {
    pub p: QuadPoly,
    pub q: QuadPoly,
    pub factor: PairFactor,
    pub base: Box<LazyOp>,
    pub components: Vec<Component>,
    pub max_depth: usize,
}

struct TransportRule {
    field: Field,
    factor: LazyOp,
    abstract_side: Mutex<OrbitSolver>,
    sides: Vec<Mutex<OrbitSolver>>,
    by_block: HashMap<Arc<str>, usize>,
    max_depth: usize,
    memo: Mutex<HashMap<BasisIndex, LinComb>>,
}

impl TransportSpec {
    pub fn compile(&self) -> Result<Arc<dyn Rule>> {
        let (a, b) = shift_pair(&self.p, &self.q)?;
        let w = LazyOp::compose(&[a.clone(), b.clone()])?;
        let f = self.p.field();
        let abstract_side = Mutex::new(OrbitSolver::for_op(&w, LinComb::unit(pair_index(1), f))?);
        let mut sides = Vec::new();
        let mut by_block = HashMap::new();
        for (k, c) in self.components.iter().enumerate() {
            sides.push(Mutex::new(OrbitSolver::for_op(&self.base, c.generator.clone())?));
            for b in &c.blocks {
                if by_block.insert(b.clone(), k).is_some() {
                    return Err(Error::Malformed(format!("block {b} lies in two components")));
                }
            }
        }
        Ok(Arc::new(TransportRule {
            field: f,
            factor: match self.factor {
                PairFactor::A => a,
                PairFactor::B => b,
            },
            abstract_side,
            sides,
            by_block,
            max_depth: self.max_depth,
            memo: Mutex::new(HashMap::new()),
        }))
    }
}

impl Rule for TransportRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        if let Some(x) = self.memo.lock().expect("memo").get(i) {
            return Ok(x.clone());
        }
        let k = *self.by_block.get(&i.block).ok_or_else(|| Error::UnknownIndex(i.to_string()))?;
        let f = self.field;
        let coeffs = self.sides[k].lock().expect("solver").express(&LinComb::unit(i.clone(), f), self.max_depth)?;
        let image = {
            let mut s = self.abstract_side.lock().expect("solver");
            let pre = s.combine(&coeffs)?;
            let moved = self.factor.apply_comb(&pre)?;
            s.express(&moved, self.max_depth + 2)?
        };
        let out = self.sides[k].lock().expect("solver").combine(&image)?;
        self.memo.lock().expect("memo").insert(i.clone(), out.clone());
        Ok(out)
    }
}

/// Transported factors `(f, g)` with `p(f) = 0`, `q(g) = 0` and `fg = v` on every component.
pub fn transport_pair(
    v: &LazyOp,
    components: Vec<Component>,
    p: &QuadPoly,
    q: &QuadPoly,
    max_depth: usize,
) -> Result<(LazyOp, LazyOp)> {
    let spec = |factor| {
        crate::opcore::RuleSpec::Transported(TransportSpec {
            p: p.clone(),
            q: q.clone(),
            factor,
            base: Box::new(v.clone()),
            components: components.clone(),
            max_depth,
        })
    };
    shift_pair(p, q)?;
    Ok((LazyOp::quadratic(spec(PairFactor::A), p.clone())?, LazyOp::quadratic(spec(PairFactor::B), q.clone())?))
}

/// Cyclic evidence for every component; fails with the first component that is not certified.
pub fn component_evidence(v: &LazyOp, components: &[Component], depth: usize) -> Result<Vec<CyclicReport>> {
    let mut out = Vec::new();
    for (k, c) in components.iter().enumerate() {
        let r = cyclic_window_cert(v, &c.generator, depth);
        if !r.passed() {
            return Err(Error::NotElementaryEvidence(format!(
                "component {k}: {}",
                r.error.clone().unwrap_or_else(|| format!("orbit dependent at {:?}", r.dependence_at))
            )));
        }
        out.push(r);
    }
    Ok(out)
}

/// One component per shift block of a pure-shift operator, generated by slot 0.
pub fn shift_components(u: &RepAut) -> Result<Vec<Component>> {
    if !u.finite_blocks().is_empty() || !u.periodic_blocks().is_empty() || !u.perturbation().is_empty() {
        return Err(Error::NotElementaryEvidence("operator is not a direct sum of scaled shifts".into()));
    }
    Ok(u
        .shift_blocks()
        .iter()
        .map(|b| Component {
            generator: LinComb::unit(BasisIndex::with_block(&b.id, None, 0), u.field()),
            blocks: vec![b.id.clone()],
        })
        .collect())
}
