use std::sync::Arc;

use crate::algebra::{acceptable, Acceptability, QuadPoly, Scalar};
use crate::error::{Error, Refusal, Result};
use crate::factorize::certificate::Certificate;
use crate::linalg::Mat;
use crate::opcore::{BasisIndex, BlockwiseSpec, Cell, LazyOp, RepAut, RuleSpec, StreamCells, StreamShape, WindowSpec};

/// Matrices `A, B, C` with `ABC = λI`, annihilated by `p1, p2, p3`: 1×1 when `λ` is a product
/// of roots, 2×2 when `λ² = N(p1)N(p2)N(p3)`.
pub fn scalar_triple_2x2(lambda: &Scalar, polys: [&QuadPoly; 3]) -> Result<[Mat; 3]> {
    let f = lambda.field();
    match acceptable(lambda, polys)? {
        Acceptability::ProductOfRoots { witness } => Ok(witness.map(|w| Mat::scalar(&w, 1))),
        Acceptability::No => Err(Error::NotAcceptable),
        Acceptability::NormSquare => {
            let [p1, p2, p3] = polys.map(QuadPoly::monic);
            let (x, _) = p1.roots().ok_or(Error::NotSplit)?;
            let beta = p2.norm();
            let gamma = p3.norm();
            // reciprocal normalizations t² − μt + β⁻¹ and t² − νt + γ⁻¹
            let mu = -p2.c1().div(&beta)?;
            let nu = -p3.c1().div(&gamma)?;
            let zero = f.zero();
            let b_prime = Mat::from_rows(f, vec![vec![zero.clone(), -beta.inv()?], vec![f.one(), mu]])?;
            let c_prime = Mat::from_rows(
                f,
                vec![
                    vec![nu, x.div(lambda)?],
                    vec![-(&(&x.inv()? * &gamma.inv()?) * lambda), zero],
                ],
            )?;
            let a = c_prime.mul(&b_prime)?.scale(lambda);
            Ok([a, b_prime.inverse()?, c_prime.inverse()?])
        }
    }
}

/// A stream of λ-eigenvectors available for tiling, from position `offset` on.
#[derive(Debug, Clone)]
pub(crate) struct FreeStream {
    pub block: Arc<str>,
    pub shape: StreamShape,
    pub offset: u64,
}

/// Blockwise factors of `λ·id` on `finite` plus every stream, pairing basis vectors into
/// cells of the triple's size; an odd leftover borrows the first position of the first stream.
pub(crate) fn scalar_tiling(
    lambda: &Scalar,
    polys: [&QuadPoly; 3],
    finite: &[BasisIndex],
    streams: &[FreeStream],
) -> Result<[BlockwiseSpec; 3]> {
    let triple = scalar_triple_2x2(lambda, polys)?;
    let size = triple[0].rows();
    let mut streams = streams.to_vec();
    let mut chunks: Vec<Vec<BasisIndex>> = finite.chunks(size).map(<[BasisIndex]>::to_vec).collect();
    if let Some(last) = chunks.last_mut().filter(|c| c.len() < size) {
        let s = streams
            .first_mut()
            .ok_or_else(|| Error::Precondition("odd finite dimension with no stream to borrow from".into()))?;
        last.push(s.shape.index(&s.block, s.offset));
        s.offset += 1;
    }
    Ok(triple.map(|m| BlockwiseSpec {
        cells: chunks.iter().map(|c| Cell { indices: c.clone(), matrix: m.clone() }).collect(),
        streams: streams
            .iter()
            .map(|s| StreamCells { block: s.block.clone(), shape: s.shape, offset: s.offset, matrix: m.clone() })
            .collect(),
        tail: None,
    }))
}

/// `λ·id` on the block layout of `space`, as a certified product of three factors.
pub fn scalar_id_factors(lambda: &Scalar, polys: [&QuadPoly; 3], space: &RepAut) -> Result<Certificate> {
    if !space.shift_blocks().is_empty() {
        return Err(Error::Refused(Refusal::Unsupported("λ·id on shift blocks is not representable".into())));
    }
    if space.periodic_blocks().is_empty() {
        return Err(Error::Precondition("the space must be infinite-dimensional".into()));
    }
    let verdict = acceptable(lambda, polys)?;
    let mut b = RepAut::builder(space.field());
    for blk in space.finite_blocks() {
        b = b.finite(&blk.id, Mat::scalar(lambda, blk.matrix.rows()));
    }
    for blk in space.periodic_blocks() {
        b = b.periodic(&blk.id, Mat::scalar(lambda, blk.matrix.rows()));
    }
    let target = b.build()?;
    let streams: Vec<FreeStream> = target
        .periodic_blocks()
        .iter()
        .map(|p| FreeStream { block: p.id.clone(), shape: StreamShape::Periodic { period: p.matrix.rows() }, offset: 0 })
        .collect();
    let specs = scalar_tiling(lambda, polys, &target.finite_indices(), &streams)?;
    let factors = specs
        .into_iter()
        .zip(polys)
        .map(|(s, p)| LazyOp::quadratic(RuleSpec::Blockwise(s), p.clone()))
        .collect::<Result<Vec<_>>>()?;
    Certificate::seal(
        &target,
        factors,
        WindowSpec::default(),
        serde_json::json!({ "branch": "scalar_id", "acceptability": verdict.name() }),
    )
}
