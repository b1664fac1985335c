use crate::algebra::{acceptable, Acceptability, Field, QuadPoly, Scalar};
use crate::error::{Error, Refusal, Result};
use crate::factorize::certificate::Certificate;
use crate::factorize::classify::Flavor;
use crate::factorize::scalar::{scalar_triple_2x2, FreeStream};
use crate::glsearch::{lambda_stable_search, Budget};
use crate::linalg::{compress, induced_det, Mat, Vector};
use crate::opcore::{BasisIndex, BlockwiseSpec, Cell, LazyOp, RepAut, RuleSpec, StreamCells, StreamShape, WindowSpec};

/// `u = λ·id + w` seen on its finite core: the finite blocks and the periodic copies that
/// the perturbation touches. Outside the core `u` is `λ·id`.
#[derive(Debug, Clone)]
pub struct CoreModel {
    pub lambda: Scalar,
    pub indices: Vec<BasisIndex>,
    /// `w` on the core.
    pub w: Mat,
    pub core_copies: u64,
}

impl CoreModel {
    /// `None` when `u` has no dominant eigenvalue.
    pub fn of(u: &RepAut) -> Result<Option<CoreModel>> {
        let Some(lambda) = u.dominant_eigenvalue() else { return Ok(None) };
        let core_copies = u.core_copies();
        let indices = u.core_indices(core_copies);
        let m = u.restrict_matrix(&indices)?;
        let w = m.sub(&Mat::scalar(&lambda, indices.len()))?;
        Ok(Some(CoreModel { lambda, indices, w, core_copies }))
    }

    /// Determinant of the map induced by `u` on `im(u − λ·id)`.
    pub fn induced_det(&self) -> Result<Scalar> {
        induced_det(&self.lambda, &self.w)
    }
}

/// Default padding bound for the λ-stable search.
pub const DEFAULT_QMAX: usize = 8;

fn unit(f: Field, n: usize, i: usize) -> Vector {
    let mut e = vec![f.zero(); n];
    e[i] = f.one();
    e
}

fn pad(f: Field, v: &[Scalar], n: usize) -> Vector {
    let mut out = v.to_vec();
    out.resize(n, f.zero());
    out
}

/// Factors `u = λ·id + w` as a product of three quadratic factors through a finite model
/// `A ⊕ λI_q` found by exhaustive search, tiling the rest of the space with scalar triples.
pub fn finite_rank_three(u: &RepAut, polys: [&QuadPoly; 3], qmax: usize, budget: &Budget) -> Result<Certificate> {
    let core = CoreModel::of(u)?.ok_or(Error::NoDominantEigenvalue)?;
    let f = u.field();
    let lambda = &core.lambda;
    let verdict = acceptable(lambda, polys)?;
    if verdict == Acceptability::No {
        return Err(Error::Refused(Refusal::NotAcceptable(format!(
            "λ = {lambda} is neither a product of roots nor a square root of N(p1)N(p2)N(p3)"
        ))));
    }
    let flavor = Flavor::of(polys);
    if let Some(fl) = flavor {
        if let Some((label, why)) = fl.determinant_obstruction(lambda, &core.induced_det()?) {
            return Err(Error::Refused(Refusal::DeterminantObstruction(format!("{fl} {label}: {why}"))));
        }
    }
    if f == Field::Rational {
        return Err(Error::UnsupportedField(match flavor {
            Some(fl) => format!("the {fl} determinant conditions hold, but finite factor search needs a prime field"),
            None => "finite factor search needs a prime field".into(),
        }));
    }

    let n = core.indices.len();
    let comp = compress(&core.w);
    let k = comp.basis.len();
    if k > budget.max_dim {
        return Err(Error::BudgetExceeded(format!("compressed dimension {k} > {}", budget.max_dim)));
    }
    let a = comp.matrix.add(&Mat::scalar(lambda, k))?;
    let q_cap = qmax.min(budget.max_dim - k);
    let polys_owned = [polys[0].clone(), polys[1].clone(), polys[2].clone()];
    let Some(hit) = lambda_stable_search(&a, lambda, &polys_owned, q_cap, budget)? else {
        return Err(if q_cap < qmax {
            Error::BudgetExceeded(format!("padding beyond q = {q_cap} exceeds dimension {}", budget.max_dim))
        } else {
            Error::Refused(Refusal::SearchExhausted(format!("no q ≤ {qmax} makes A ⊕ λI_q a product")))
        });
    };

    // λ-eigenvectors of the core completing span(basis)
    let mut kernel_part: Vec<Vector> = Vec::new();
    let mut span = comp.basis.clone();
    for v in core.w.kernel() {
        let mut cols = span.clone();
        cols.push(v.clone());
        if Mat::from_columns(f, n, &cols).rank() == cols.len() {
            span.push(v.clone());
            kernel_part.push(v);
        }
    }
    let triple = scalar_triple_2x2(lambda, polys)?;
    let size = triple[0].rows();
    let q = hit.q;
    let used = q.min(kernel_part.len());
    let leftover = kernel_part.len() - used;
    let mut borrowed = q - used;
    let parity = (size - leftover % size) % size;
    borrowed += parity;

    let blocks = u.periodic_blocks();
    let mut streams: Vec<FreeStream> = blocks
        .iter()
        .map(|b| FreeStream {
            block: b.id.clone(),
            shape: StreamShape::Periodic { period: b.matrix.rows() },
            offset: core.core_copies * b.matrix.rows() as u64,
        })
        .collect();
    let mut region = core.indices.clone();
    if borrowed > 0 {
        let s = streams.first_mut().ok_or_else(|| Error::Precondition("no periodic block to borrow from".into()))?;
        for _ in 0..borrowed {
            region.push(s.shape.index(&s.block, s.offset));
            s.offset += 1;
        }
    }
    let big = region.len();
    let mut cols: Vec<Vector> = comp.basis.iter().map(|v| pad(f, v, big)).collect();
    cols.extend(kernel_part[..used].iter().map(|v| pad(f, v, big)));
    cols.extend((0..q - used).map(|j| unit(f, big, n + j)));
    cols.extend(kernel_part[used..].iter().map(|v| pad(f, v, big)));
    cols.extend((q - used..borrowed).map(|j| unit(f, big, n + j)));
    let change = Mat::from_columns(f, big, &cols);
    let change_inv = change.inverse()?;
    let tiles = (leftover + parity) / size;

    let mut factors = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        let block = (0..tiles).fold(hit.factors[i].clone(), |acc, _| acc.direct_sum(&triple[i]));
        let cell = Cell { indices: region.clone(), matrix: change.mul(&block)?.mul(&change_inv)? };
        let spec = BlockwiseSpec {
            cells: vec![cell],
            streams: streams
                .iter()
                .map(|s| StreamCells { block: s.block.clone(), shape: s.shape, offset: s.offset, matrix: triple[i].clone() })
                .collect(),
            tail: None,
        };
        factors.push(LazyOp::quadratic(RuleSpec::Blockwise(spec), (*p).clone())?);
    }
    Certificate::seal(
        u,
        factors,
        WindowSpec::default(),
        serde_json::json!({
            "branch": "finite_rank",
            "lambda": lambda.to_string(),
            "acceptability": verdict.name(),
            "compressed_dim": k,
            "q": q,
            "parity_checked": hit.parity_checked,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{LinComb, Window};

    fn perturbed(f: Field, lambda: i64, w: i64) -> RepAut {
        let e = BasisIndex::periodic("P0", 0, 0);
        RepAut::builder(f)
            .periodic("P0", Mat::scalar(&f.from_i64(lambda), 1))
            .perturb(e.clone(), LinComb::term(e, f.from_i64(w)))
            .build()
            .unwrap()
    }

    fn three(s: &str, f: Field) -> [QuadPoly; 3] {
        let p = QuadPoly::parse(s, f).unwrap();
        [p.clone(), p.clone(), p]
    }

    #[test]
    fn two_plus_rank_one_over_f5() {
        let f5 = Field::prime(5).unwrap();
        let ps = three("t^2-1", f5);
        let u = perturbed(f5, 2, 1);
        let cert = finite_rank_three(&u, [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default()).unwrap();
        assert!(cert.report.passed());
        let w = Window::for_aut(&u, &WindowSpec::default().doubled());
        assert!(crate::factorize::certificate::verify_certificate(&u, &cert, &w).passed());
    }

    #[test]
    fn refusals() {
        let f7 = Field::prime(7).unwrap();
        let ps = three("t^2-1", f7);
        let r = finite_rank_three(&perturbed(f7, 3, 1), [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default());
        assert!(matches!(r, Err(Error::Refused(Refusal::NotAcceptable(_)))));

        let f5 = Field::prime(5).unwrap();
        let ps = three("(t-1)^2", f5);
        let r = finite_rank_three(&perturbed(f5, 1, 1), [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default());
        assert!(matches!(r, Err(Error::Refused(Refusal::DeterminantObstruction(_)))));

        let q = Field::Rational;
        let ps = three("t^2-1", q);
        let r = finite_rank_three(&perturbed(q, 1, 1), [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default());
        assert!(matches!(r, Err(Error::Refused(Refusal::DeterminantObstruction(_)))));
        let r = finite_rank_three(&perturbed(q, 1, -2), [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default());
        assert!(matches!(r, Err(Error::UnsupportedField(_))));
    }

    #[test]
    fn larger_core_with_finite_block() {
        let f5 = Field::prime(5).unwrap();
        let ps = three("t^2-1", f5);
        let two = f5.from_i64(2);
        let u = RepAut::builder(f5)
            .finite("F0", Mat::scalar(&two, 3))
            .periodic("P0", Mat::scalar(&two, 2))
            .perturb(BasisIndex::periodic("P0", 1, 0), LinComb::term(BasisIndex::new("F0", 2), f5.one()))
            .build()
            .unwrap();
        let cert = finite_rank_three(&u, [&ps[0], &ps[1], &ps[2]], DEFAULT_QMAX, &Budget::default()).unwrap();
        assert!(cert.report.passed());
        assert_eq!(cert.provenance["branch"], "finite_rank");
    }
}
