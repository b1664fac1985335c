use std::sync::Arc;

use crate::algebra::UniPoly;
use crate::error::{Error, Refusal, Result};
use crate::linalg::{frobenius, vector_minpoly, Mat};
use crate::modulestruct::span::Echelon;
use crate::modulestruct::strat::{Dim, Stratum};
use crate::opcore::{BasisIndex, BlockKind, CheckReport, LinComb, RepAut};

/// Matrix of `u` on the finite blocks modulo the shift blocks.
pub fn finite_quotient_matrix(u: &RepAut) -> Result<Mat> {
    let idx = u.finite_indices();
    let f = u.field();
    let mut m = Mat::zeros(f, idx.len(), idx.len());
    for (j, b) in idx.iter().enumerate() {
        for (i, x) in u.apply(b)?.iter() {
            if let Some(r) = idx.iter().position(|k| k == i) {
                m.set(r, j, x.clone());
            }
        }
    }
    Ok(m)
}

fn check_free_class(u: &RepAut) -> Result<()> {
    if u.shift_blocks().is_empty() {
        return Err(Error::NoFreePart);
    }
    if !u.periodic_blocks().is_empty() {
        return Err(Error::Refused(Refusal::Unsupported(
            "operators mixing shift blocks with periodic families".into(),
        )));
    }
    Ok(())
}

/// Cyclic strata of the torsion quotient `V/W`, `W` the span of the shift blocks.
pub fn quotient_strata(u: &RepAut) -> Result<Vec<Stratum>> {
    check_free_class(u)?;
    let idx = u.finite_indices();
    if idx.is_empty() {
        return Ok(Vec::new());
    }
    let m = finite_quotient_matrix(u)?;
    Ok(frobenius(&m)?
        .into_iter()
        .map(|p| Stratum {
            generator: LinComb::from_terms(idx.iter().cloned().zip(p.generator)),
            dim: Dim::Finite(p.degree),
        })
        .collect())
}

fn apply_poly(u: &RepAut, g: &UniPoly, x: &LinComb) -> Result<LinComb> {
    let mut out = LinComb::zero();
    let mut pw = x.clone();
    for (k, c) in g.coeffs().iter().enumerate() {
        if k > 0 {
            pw = u.apply_comb(&pw)?;
        }
        out.add_scaled(&pw, c);
    }
    Ok(out)
}

fn finite_coords(u: &RepAut, x: &LinComb) -> Vec<crate::algebra::Scalar> {
    u.finite_indices().iter().map(|i| x.get(i).cloned().unwrap_or_else(|| u.field().zero())).collect()
}

/// Representatives `x_k` with `f_k(u)(x_k)` in `W₀ = span{e_(S,j) : j ≤ 0}`, `S` the first shift
/// block and `f_k` the minimal polynomial of the class of `x_k`.
pub fn adjust_reps(u: &RepAut, reps: &[LinComb]) -> Result<Vec<LinComb>> {
    check_free_class(u)?;
    let s = &u.shift_blocks()[0];
    let m = finite_quotient_matrix(u)?;
    let mut out = Vec::with_capacity(reps.len());
    for x in reps {
        let (_, f) = vector_minpoly(&m, &finite_coords(u, x));
        let n = f.degree().unwrap_or(0) as i64;
        let scale = s.multiplier.pow(n)?;
        let mut x = x.clone();
        loop {
            let r = apply_poly(u, &f, &x)?;
            let top = r
                .iter()
                .rev()
                .find(|(i, _)| i.block == s.id && i.slot > 0)
                .map(|(i, c)| (i.slot, c.clone()));
            let Some((slot, c)) = top else { break };
            x.add_term(BasisIndex::with_block(&s.id, None, slot - n), -(c.div(&scale)?));
        }
        out.push(x);
    }
    Ok(out)
}

/// Checks `u^{n_k}(x_k) ∈ W₀ + span{u^l(x_i) : i ≤ k, l < n_i}` for each representative.
pub fn check_adjusted(u: &RepAut, reps: &[LinComb], dims: &[usize]) -> CheckReport {
    let mut r = CheckReport::new("adjusted representatives");
    let Some(s) = u.shift_blocks().first() else {
        r.record(false, None, || "no shift block".into());
        return r;
    };
    let block: Arc<str> = s.id.clone();
    let project = |x: &LinComb| x.partition(|i| !(i.block == block && i.slot <= 0)).0;
    let mut span = Echelon::new();
    for (k, (x, &n)) in reps.iter().zip(dims).enumerate() {
        let mut y = x.clone();
        for _ in 0..n {
            span.insert(&project(&y));
            y = match u.apply_comb(&y) {
                Ok(z) => z,
                Err(e) => {
                    r.record(false, None, || e.to_string());
                    return r;
                }
            };
        }
        r.record(span.contains(&project(&y)), None, || format!("representative {k} escapes W₀"));
    }
    r
}

/// Whether `i` lies in a shift block of `u`.
pub fn is_shift_index(u: &RepAut, i: &BasisIndex) -> bool {
    matches!(u.kind(i), Ok(BlockKind::Shift(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Field, QuadPoly};

    #[test]
    fn strata_examples() {
        let f = Field::prime(5).unwrap();
        let comp = Mat::companion(&QuadPoly::parse("t^2-t-1", f).unwrap());
        let u = RepAut::builder(f).shift("S0", f.one()).finite("F0", comp).build().unwrap();
        let s = quotient_strata(&u).unwrap();
        assert_eq!(s.iter().map(|x| x.dim).collect::<Vec<_>>(), vec![Dim::Finite(2)]);
        assert!(quotient_strata(&RepAut::shift(f)).unwrap().is_empty());
        let d = RepAut::builder(f).shift("S0", f.one()).finite("F0", Mat::from_i64(f, &[&[1, 0], &[0, 2]])).build().unwrap();
        assert_eq!(quotient_strata(&d).unwrap().len(), 1);
        let p = RepAut::builder(f).periodic("P0", Mat::identity(f, 1)).build().unwrap();
        assert_eq!(quotient_strata(&p).unwrap_err(), Error::NoFreePart);
    }

    fn coupled(slot: i64) -> RepAut {
        let f = Field::prime(5).unwrap();
        RepAut::builder(f)
            .shift("S0", f.one())
            .finite("F0", Mat::from_i64(f, &[&[2]]))
            .coupling(BasisIndex::new("F0", 0), LinComb::unit(BasisIndex::new("S0", slot), f))
            .build()
            .unwrap()
    }

    #[test]
    fn adjust_pulls_back_shift_tail() {
        let u = coupled(3);
        let f = u.field();
        let x = LinComb::unit(BasisIndex::new("F0", 0), f);
        let adj = adjust_reps(&u, std::slice::from_ref(&x)).unwrap();
        let s = |k| BasisIndex::new("S0", k);
        let expect = LinComb::from_terms([
            (BasisIndex::new("F0", 0), f.one()),
            (s(2), f.from_i64(-1)),
            (s(1), f.from_i64(-2)),
            (s(0), f.from_i64(-4)),
        ]);
        assert_eq!(adj[0], expect);
        assert_eq!(u.apply_comb(&adj[0]).unwrap(), {
            let mut y = expect.scale(&f.from_i64(2));
            y.add_term(s(0), f.from_i64(3));
            y
        });
        assert!(check_adjusted(&u, &adj, &[1]).passed());
        assert!(!check_adjusted(&u, &[x], &[1]).passed());
    }

    #[test]
    fn low_coupling_unchanged() {
        let u = coupled(0);
        let x = LinComb::unit(BasisIndex::new("F0", 0), u.field());
        assert_eq!(adjust_reps(&u, std::slice::from_ref(&x)).unwrap(), vec![x]);
        let plain = RepAut::builder(u.field()).shift("S0", u.field().one()).finite("F0", Mat::from_i64(u.field(), &[&[2]])).build().unwrap();
        let y = LinComb::unit(BasisIndex::new("F0", 0), u.field());
        assert_eq!(adjust_reps(&plain, std::slice::from_ref(&y)).unwrap(), vec![y]);
    }
}
