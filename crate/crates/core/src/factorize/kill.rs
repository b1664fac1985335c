use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::opcore::{
    BasisIndex, BlockwiseSpec, Cell, IndexMap, LazyOp, RepAut, RuleSpec, StreamCells, StreamMap, StreamShape, Witness,
};

/// `a` annihilated by `p`, `v = a∘u` without a dominant eigenvalue, and `v` as a [`RepAut`]
/// on relabeled indices (`map` sends them back; `None` means the labels are unchanged).
#[derive(Debug, Clone)]
pub struct Killed {
    pub a: LazyOp,
    pub v: LazyOp,
    pub v_rep: RepAut,
    pub map: Option<IndexMap>,
}

/// Moves an operator on the relabeled side of `map` back to the original indices.
pub fn relabel(op: &LazyOp, map: &IndexMap) -> Result<LazyOp> {
    let spec = RuleSpec::Relabel { op: Box::new(op.spec().clone()), map: map.clone() };
    match op.annihilator() {
        Some(p) => LazyOp::quadratic(spec, p.clone()),
        None => LazyOp::new(spec, Witness::None),
    }
}

/// Pairs the basis into 2-dimensional cells and lets `a` act on each as `companion(p)`.
///
/// The finite core (finite blocks plus the periodic copies touched by the perturbation) is paired
/// in an order shuffled by `pairing_seed`; seed 0 keeps the natural order.
pub fn kill_dominant(u: &RepAut, p: &QuadPoly, pairing_seed: u64) -> Result<Killed> {
    let f = u.field();
    let Some(lambda) = u.dominant_eigenvalue() else {
        let (omega, _) = p.roots().ok_or(Error::NotSplit)?;
        let a = LazyOp::quadratic(RuleSpec::Scalar { value: omega.clone() }, p.clone())?;
        let v = LazyOp::compose(&[a.clone(), LazyOp::from_aut(u)])?;
        return Ok(Killed { a, v, v_rep: u.scaled(&omega)?, map: None });
    };
    if !p.is_non_derogatory() {
        return Err(Error::DerogatoryInput);
    }
    let cc = u.core_copies();
    let mut core = u.core_indices(cc);
    let blocks = u.periodic_blocks();
    let mut offsets: Vec<u64> = blocks.iter().map(|b| cc * b.matrix.rows() as u64).collect();
    if core.len() % 2 == 1 {
        let shape = StreamShape::Periodic { period: blocks[0].matrix.rows() };
        core.push(shape.index(&blocks[0].id, offsets[0]));
        offsets[0] += 1;
    }
    if pairing_seed != 0 {
        core.shuffle(&mut ChaCha8Rng::seed_from_u64(pairing_seed));
    }
    let comp = Mat::companion(p);
    let n = core.len();
    let mut a_core = Mat::zeros(f, n, n);
    for k in (0..n).step_by(2) {
        for r in 0..2 {
            for c in 0..2 {
                a_core.set(k + r, k + c, comp.get(r, c).clone());
            }
        }
    }
    let spec = BlockwiseSpec {
        cells: core.chunks(2).map(|c| Cell { indices: c.to_vec(), matrix: comp.clone() }).collect(),
        streams: blocks
            .iter()
            .zip(&offsets)
            .map(|(b, &o)| StreamCells {
                block: b.id.clone(),
                shape: StreamShape::Periodic { period: b.matrix.rows() },
                offset: o,
                matrix: comp.clone(),
            })
            .collect(),
        tail: None,
    };
    let a = LazyOp::quadratic(RuleSpec::Blockwise(spec), p.clone())?;
    let v = LazyOp::compose(&[a.clone(), LazyOp::from_aut(u)])?;

    let tail = comp.scale(&lambda);
    let mut b = RepAut::builder(f);
    let mut map = IndexMap::default();
    if n > 0 {
        b = b.finite("K", a_core.mul(&u.restrict_matrix(&core)?)?);
        let k: Arc<str> = Arc::from("K");
        map.table = core.iter().enumerate().map(|(j, i)| (BasisIndex::with_block(&k, None, j as i64), i.clone())).collect();
    }
    for (j, (blk, &o)) in blocks.iter().zip(&offsets).enumerate() {
        let id = format!("Q{j}");
        b = b.periodic(&id, tail.clone());
        map.streams.push(StreamMap {
            inner: Arc::from(id.as_str()),
            inner_shape: StreamShape::Periodic { period: 2 },
            outer: blk.id.clone(),
            outer_shape: StreamShape::Periodic { period: blk.matrix.rows() },
            offset: o,
        });
    }
    Ok(Killed { a, v, v_rep: b.build()?, map: Some(map) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;
    use crate::opcore::{equal_on_window, LinComb, Window, WindowSpec};

    fn rank_one(f: Field, lambda: i64) -> RepAut {
        let e = BasisIndex::periodic("P0", 0, 0);
        RepAut::builder(f)
            .finite("F0", Mat::scalar(&f.from_i64(lambda), 2))
            .periodic("P0", Mat::scalar(&f.from_i64(lambda), 1))
            .perturb(BasisIndex::new("F0", 0), LinComb::unit(e, f))
            .build()
            .unwrap()
    }

    fn check(u: &RepAut, k: &Killed, p: &QuadPoly) {
        assert!(k.v_rep.dominant_eigenvalue().is_none());
        let w = Window::for_aut(u, &WindowSpec::from_radius(12));
        assert!(crate::opcore::check_annihilated(&k.a, p, &w).passed());
        let back = match &k.map {
            Some(m) => relabel(&LazyOp::from_aut(&k.v_rep), m).unwrap(),
            None => LazyOp::from_aut(&k.v_rep),
        };
        assert!(equal_on_window(&back, &k.v, &w).passed());
        let a_inv = k.a.invert().unwrap();
        let u_again = LazyOp::compose(&[a_inv, k.v.clone()]).unwrap();
        assert!(equal_on_window(&u_again, u, &w).passed());
    }

    #[test]
    fn scalar_becomes_scaled_swaps() {
        let f7 = Field::prime(7).unwrap();
        let p = QuadPoly::parse("t^2-1", f7).unwrap();
        let u = RepAut::scalar(&f7.from_i64(3)).unwrap();
        let k = kill_dominant(&u, &p, 0).unwrap();
        assert_eq!(k.v_rep.periodic_blocks()[0].matrix, Mat::from_i64(f7, &[&[0, 3], &[3, 0]]));
        check(&u, &k, &p);
    }

    #[test]
    fn odd_core_and_seeds() {
        let f7 = Field::prime(7).unwrap();
        let p = QuadPoly::parse("t^2-1", f7).unwrap();
        let u = rank_one(f7, 3);
        let k0 = kill_dominant(&u, &p, 0).unwrap();
        let k1 = kill_dominant(&u, &p, 1).unwrap();
        let k1b = kill_dominant(&u, &p, 1).unwrap();
        assert_eq!(k1.a, k1b.a);
        assert_ne!(k0.a, k1.a);
        check(&u, &k0, &p);
        check(&u, &k1, &p);
    }

    #[test]
    fn no_dominant_eigenvalue_scales() {
        let f5 = Field::prime(5).unwrap();
        let p = QuadPoly::parse("(t-2)(t-3)", f5).unwrap();
        let u = RepAut::shift(f5);
        let k = kill_dominant(&u, &p, 0).unwrap();
        assert!(k.map.is_none());
        assert_eq!(k.v_rep.shift_blocks()[0].multiplier, f5.from_i64(2));
        check(&u, &k, &p);
    }
}
