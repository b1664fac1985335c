use std::sync::Arc;

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::modulestruct::Echelon;
use crate::opcore::{BasisIndex, BlockwiseSpec, Cell, LazyOp, LinComb, RuleSpec};

/// `W + a(W) + b(W) + c(W) + ba(W) + cb(W) + ac(W) + ca(W)`, checked to contain `W`, to be
/// stable under `a`, `b`, `c`, and to have dimension at most `8·dim W`.
pub fn invariant_closure(a: &LazyOp, b: &LazyOp, c: &LazyOp, w: &[LinComb]) -> Result<Vec<LinComb>> {
    let mut span = Echelon::new();
    let mut dim_w = 0;
    for x in w {
        if span.insert(x) {
            dim_w += 1;
        }
    }
    for x in w {
        let (ax, bx, cx) = (a.apply_comb(x)?, b.apply_comb(x)?, c.apply_comb(x)?);
        for y in [b.apply_comb(&ax)?, c.apply_comb(&bx)?, a.apply_comb(&cx)?, c.apply_comb(&ax)?, ax, bx, cx] {
            span.insert(&y);
        }
    }
    let basis = span.rows().to_vec();
    if basis.len() > 8 * dim_w {
        return Err(Error::HypothesisViolation(format!("closure has dimension {} > 8·{dim_w}", basis.len())));
    }
    for (name, op) in [("a", a), ("b", b), ("c", c)] {
        for x in &basis {
            if !span.contains(&op.apply_comb(x)?) {
                return Err(Error::HypothesisViolation(format!("{name} does not stabilize the closure")));
            }
        }
    }
    Ok(basis)
}

/// A matrix as an operator on the indices `block[0..n]`, annihilated by `p`.
pub fn finite_factor(block: &str, m: &Mat, p: &QuadPoly) -> Result<LazyOp> {
    let id: Arc<str> = Arc::from(block);
    let indices = (0..m.rows()).map(|k| BasisIndex::with_block(&id, None, k as i64)).collect();
    let spec = BlockwiseSpec { cells: vec![Cell { indices, matrix: m.clone() }], streams: vec![], tail: None };
    LazyOp::quadratic(RuleSpec::Blockwise(spec), p.clone())
}

/// A coordinate vector on `block[0..n]`.
pub fn vector_comb(block: &str, v: &[crate::algebra::Scalar]) -> LinComb {
    let id: Arc<str> = Arc::from(block);
    LinComb::from_terms(v.iter().enumerate().map(|(k, x)| (BasisIndex::with_block(&id, None, k as i64), x.clone())))
}

/// Coordinates of `x` on `block[0..n]`.
pub fn comb_vector(block: &str, n: usize, x: &LinComb, f: crate::algebra::Field) -> Result<Vector> {
    let mut out = vec![f.zero(); n];
    for (i, c) in x.iter() {
        if &*i.block != block || i.copy.is_some() || i.slot < 0 || i.slot as usize >= n {
            return Err(Error::UnknownIndex(i.to_string()));
        }
        out[i.slot as usize] = c.clone();
    }
    Ok(out)
}

/// The two elements that commute with both `a` and `b` when `p(a) = q(b) = 0`:
/// `a·b*_q + b·a*_p` and `ab + N(p)N(q)(ab)⁻¹`.
pub fn commuting_pair(a: &Mat, p: &QuadPoly, b: &Mat, q: &QuadPoly) -> Result<[Mat; 2]> {
    let first = a.mul(&b.star(q)?)?.add(&b.mul(&a.star(p)?)?)?;
    let ab = a.mul(b)?;
    let second = ab.add(&ab.inverse()?.scale(&(&p.norm() * &q.norm())))?;
    Ok([first, second])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;

    fn ops(ms: [&Mat; 3], ps: [&QuadPoly; 3]) -> [LazyOp; 3] {
        [0, 1, 2].map(|k| finite_factor("X", ms[k], ps[k]).unwrap())
    }

    #[test]
    fn identity_triple_keeps_w() {
        let f = Field::prime(3).unwrap();
        let p = QuadPoly::parse("t^2-1", f).unwrap();
        let id = Mat::identity(f, 4);
        let [a, b, c] = ops([&id, &id, &id], [&p, &p, &p]);
        let w = vec![vector_comb("X", &[f.one(), f.one(), f.zero(), f.zero()])];
        let closure = invariant_closure(&a, &b, &c, &w).unwrap();
        assert_eq!(closure.len(), 1);
    }

    #[test]
    fn involutions_in_gl4_f3() {
        let f = Field::prime(3).unwrap();
        let p = QuadPoly::parse("t^2-1", f).unwrap();
        let a = Mat::from_i64(f, &[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let b = Mat::from_i64(f, &[&[1, 0, 0, 0], &[0, 0, 1, 0], &[0, 1, 0, 0], &[0, 0, 0, 1]]);
        let c = Mat::from_i64(f, &[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]]);
        let w = a.mul(&b).unwrap().mul(&c).unwrap().sub(&Mat::identity(f, 4)).unwrap();
        let image: Vec<LinComb> = w.image().iter().map(|v| vector_comb("X", v)).collect();
        let [oa, ob, oc] = ops([&a, &b, &c], [&p, &p, &p]);
        let closure = invariant_closure(&oa, &ob, &oc, &image).unwrap();
        assert!(closure.len() <= 8 * image.len());
        for x in &image {
            let mut e = Echelon::new();
            closure.iter().for_each(|y| {
                e.insert(y);
            });
            assert!(e.contains(x));
        }
    }

    #[test]
    fn commuting_pair_commutes() {
        let f = Field::prime(5).unwrap();
        let p = QuadPoly::parse("t^2-1", f).unwrap();
        let q = QuadPoly::parse("(t-1)^2", f).unwrap();
        let a = Mat::from_i64(f, &[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]);
        let b = Mat::from_i64(f, &[&[1, 1, 2], &[0, 1, 0], &[0, 0, 1]]);
        assert!(a.annihilates(&p) && b.annihilates(&q));
        for m in commuting_pair(&a, &p, &b, &q).unwrap() {
            assert_eq!(m.mul(&a).unwrap(), a.mul(&m).unwrap());
            assert_eq!(m.mul(&b).unwrap(), b.mul(&m).unwrap());
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let f = Field::prime(7).unwrap();
        let v = vec![f.from_i64(3), f.zero(), f.from_i64(6)];
        assert_eq!(comb_vector("X", 3, &vector_comb("X", &v), f).unwrap(), v);
    }
}
