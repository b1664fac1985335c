use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Field, Scalar};
use crate::error::{Error, Result};
use crate::opcore::index::BasisIndex;
use crate::opcore::lazy::LazyOp;
use crate::opcore::lincomb::LinComb;
use crate::opcore::report::CheckReport;
use crate::opcore::rule::{apply_comb, Rule};

/// Exponent ↦ coefficient; `Σ c_k v^k(x)`.
pub type OrbitCoeffs = BTreeMap<i64, Scalar>;

fn add_scaled(into: &mut OrbitCoeffs, from: &OrbitCoeffs, c: &Scalar) {
    for (k, x) in from {
        let e = into.entry(*k).or_insert_with(|| c.field().zero());
        *e = &*e + &(x * c);
        if e.is_zero() {
            into.remove(k);
        }
    }
}

struct Row {
    vec: LinComb,
    combo: OrbitCoeffs,
}

/// Incremental echelon basis of `{v^k(x) : |k| ≤ depth}`.
///
/// Rows are normalized at their largest index; reduction eliminates pivots from the top down.
pub struct OrbitSolver {
    v: Arc<dyn Rule>,
    v_inv: Arc<dyn Rule>,
    field: Field,
    pos: Vec<LinComb>,
    neg: Vec<LinComb>,
    rows: Vec<Row>,
    pivots: HashMap<BasisIndex, usize>,
    dependence: Option<i64>,
}

impl OrbitSolver {
    pub fn new(v: Arc<dyn Rule>, v_inv: Arc<dyn Rule>, x: LinComb) -> Result<OrbitSolver> {
        let field = x
            .iter()
            .next()
            .map(|(_, c)| c.field())
            .ok_or_else(|| Error::Precondition("orbit of the zero vector".into()))?;
        let mut s = OrbitSolver {
            v,
            v_inv,
            field,
            pos: vec![x.clone()],
            neg: vec![x],
            rows: Vec::new(),
            pivots: HashMap::new(),
            dependence: None,
        };
        s.insert(0)?;
        Ok(s)
    }

    pub fn for_op(v: &LazyOp, x: LinComb) -> Result<OrbitSolver> {
        let inv = v.invert()?;
        OrbitSolver::new(v.rule().clone(), inv.rule().clone(), x)
    }

    pub fn depth(&self) -> usize {
        self.pos.len() - 1
    }

    /// First exponent whose orbit vector fell in the span of the earlier ones.
    pub fn dependence(&self) -> Option<i64> {
        self.dependence
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// `v^k(x)`, computing the orbit out to `|k|` if needed.
    pub fn orbit(&mut self, k: i64) -> Result<&LinComb> {
        while self.depth() < k.unsigned_abs() as usize {
            self.grow()?;
        }
        Ok(if k >= 0 { &self.pos[k as usize] } else { &self.neg[(-k) as usize] })
    }

    /// Adds `v^{d}(x)` and `v^{−d}(x)` for the next depth `d`.
    pub fn grow(&mut self) -> Result<()> {
        let d = self.pos.len() as i64;
        let next = apply_comb(self.v.as_ref(), self.pos.last().expect("nonempty"))?;
        self.pos.push(next);
        self.insert(d)?;
        let prev = apply_comb(self.v_inv.as_ref(), self.neg.last().expect("nonempty"))?;
        self.neg.push(prev);
        self.insert(-d)?;
        Ok(())
    }

    pub fn grow_to(&mut self, depth: usize) -> Result<()> {
        while self.depth() < depth {
            self.grow()?;
        }
        Ok(())
    }

    fn insert(&mut self, k: i64) -> Result<()> {
        let vec = if k >= 0 { self.pos[k as usize].clone() } else { self.neg[(-k) as usize].clone() };
        let mut combo = OrbitCoeffs::new();
        combo.insert(k, self.field.one());
        let (rem, combo) = self.reduce_from(vec, combo);
        let Some(p) = rem.max_index().cloned() else {
            self.dependence.get_or_insert(k);
            return Ok(());
        };
        let inv = rem.get(&p).expect("pivot present").inv()?;
        let mut c = OrbitCoeffs::new();
        add_scaled(&mut c, &combo, &inv);
        self.pivots.insert(p, self.rows.len());
        self.rows.push(Row { vec: rem.scale(&inv), combo: c });
        Ok(())
    }

    /// Reduces `rem` against the rows; `combo` tracks `rem` as orbit coefficients minus what was removed.
    fn reduce_from(&self, mut rem: LinComb, mut combo: OrbitCoeffs) -> (LinComb, OrbitCoeffs) {
        let mut bound: Option<BasisIndex> = None;
        loop {
            let hit = {
                let mut it: Box<dyn Iterator<Item = (&BasisIndex, &Scalar)>> = match &bound {
                    Some(b) => Box::new(rem.iter_below(b)),
                    None => Box::new(rem.iter().rev()),
                };
                it.find(|(i, _)| self.pivots.contains_key(*i)).map(|(i, c)| (i.clone(), c.clone()))
            };
            let Some((i, c)) = hit else { break };
            let row = &self.rows[self.pivots[&i]];
            rem.add_scaled(&row.vec, &-&c);
            add_scaled(&mut combo, &row.combo, &-&c);
            bound = Some(i);
        }
        (rem, combo)
    }

    /// Coefficients `c_k` with `target = Σ c_k v^k(x)`, growing the orbit up to `max_depth`.
    pub fn express(&mut self, target: &LinComb, max_depth: usize) -> Result<OrbitCoeffs> {
        let (mut rem, mut acc) = self.reduce_from(target.clone(), OrbitCoeffs::new());
        loop {
            if rem.is_zero() {
                let mut out = OrbitCoeffs::new();
                add_scaled(&mut out, &acc, &-&self.field.one());
                return Ok(out);
            }
            if self.depth() >= max_depth {
                return Err(Error::NotReached(max_depth));
            }
            self.grow()?;
            (rem, acc) = self.reduce_from(rem, acc);
        }
    }

    /// `Σ c_k v^k(x)`.
    pub fn combine(&mut self, coeffs: &OrbitCoeffs) -> Result<LinComb> {
        let mut out = LinComb::zero();
        for (k, c) in coeffs {
            let v = self.orbit(*k)?.clone();
            out.add_scaled(&v, c);
        }
        Ok(out)
    }

    /// Whether a vector lies in the span reached so far.
    pub fn in_span(&self, target: &LinComb) -> bool {
        self.reduce_from(target.clone(), OrbitCoeffs::new()).0.is_zero()
    }

    /// Union of supports of the computed orbit vectors.
    pub fn touched(&self) -> Vec<BasisIndex> {
        let mut s: std::collections::BTreeSet<BasisIndex> = std::collections::BTreeSet::new();
        for x in self.pos.iter().chain(&self.neg) {
            s.extend(x.support().cloned());
        }
        s.into_iter().collect()
    }
}

/// Evidence that `x` is a cyclic vector for `v` up to depth `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicReport {
    pub depth: usize,
    pub independent: bool,
    pub dependence_at: Option<i64>,
    /// Window basis vectors lying in the span of the computed orbit.
    pub spanned: Vec<BasisIndex>,
    pub error: Option<String>,
}

impl CyclicReport {
    pub fn passed(&self) -> bool {
        self.independent && self.error.is_none()
    }

    pub fn to_check(&self, name: &str) -> CheckReport {
        let mut r = CheckReport::new(format!("{name}: cyclic orbit independent to depth {}", self.depth));
        r.record(self.passed(), None, || match (&self.error, self.dependence_at) {
            (Some(e), _) => e.clone(),
            (None, Some(k)) => format!("orbit dependent at exponent {k}"),
            (None, None) => String::new(),
        });
        r
    }
}

/// Checks independence of `{v^k(x) : −N ≤ k ≤ N}` and records the spanned basis vectors.
pub fn cyclic_window_cert(v: &LazyOp, x: &LinComb, depth: usize) -> CyclicReport {
    let run = || -> Result<CyclicReport> {
        let mut s = OrbitSolver::for_op(v, x.clone())?;
        s.grow_to(depth)?;
        let f = s.field;
        let spanned =
            s.touched().into_iter().filter(|i| s.in_span(&LinComb::unit(i.clone(), f))).collect();
        Ok(CyclicReport {
            depth,
            independent: s.dependence().is_none(),
            dependence_at: s.dependence(),
            spanned,
            error: None,
        })
    };
    run().unwrap_or_else(|e| CyclicReport {
        depth,
        independent: false,
        dependence_at: None,
        spanned: Vec::new(),
        error: Some(e.to_string()),
    })
}

/// Exact coefficients of `target` in the orbit basis of `x`, as `(exponent, coefficient)` pairs.
pub fn express_in_orbit_basis(
    v: &LazyOp,
    x: &LinComb,
    target: &LinComb,
    max_depth: usize,
) -> Result<Vec<(i64, Scalar)>> {
    let mut s = OrbitSolver::for_op(v, x.clone())?;
    Ok(s.express(target, max_depth)?.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::repaut::RepAut;

    fn s0(k: i64) -> BasisIndex {
        BasisIndex::new("S0", k)
    }

    #[test]
    fn shift_orbit() {
        let f = Field::prime(5).unwrap();
        let v = LazyOp::from_aut(&RepAut::shift(f));
        let e0 = LinComb::unit(s0(0), f);
        let r = cyclic_window_cert(&v, &e0, 4);
        assert!(r.passed());
        assert_eq!(r.spanned, (-4..=4).map(s0).collect::<Vec<_>>());
        let c = express_in_orbit_basis(&v, &e0, &LinComb::unit(s0(5), f), 8).unwrap();
        assert_eq!(c, vec![(5, f.one())]);
        let t = LinComb::from_terms([(s0(0), f.one()), (s0(1), f.one())]);
        let c = express_in_orbit_basis(&v, &e0, &t, 1).unwrap();
        assert_eq!(c, vec![(0, f.one()), (1, f.one())]);
        assert_eq!(express_in_orbit_basis(&v, &e0, &LinComb::unit(s0(5), f), 3), Err(Error::NotReached(3)));
    }

    #[test]
    fn identity_is_dependent() {
        let f = Field::prime(5).unwrap();
        let r = cyclic_window_cert(&LazyOp::identity(f), &LinComb::unit(s0(0), f), 1);
        assert!(!r.passed());
        assert_eq!(r.dependence_at, Some(1));
    }

    #[test]
    fn scaled_shift_recombines() {
        let f = Field::prime(7).unwrap();
        let u = RepAut::builder(f).shift("S0", f.from_i64(3)).build().unwrap();
        let v = LazyOp::from_aut(&u);
        let e0 = LinComb::unit(s0(0), f);
        let mut s = OrbitSolver::for_op(&v, e0).unwrap();
        let target = LinComb::from_terms([(s0(-3), f.from_i64(2)), (s0(4), f.one())]);
        let c = s.express(&target, 10).unwrap();
        assert_eq!(s.combine(&c).unwrap(), target);
    }
}
