use crate::algebra::{Scalar, UniPoly};
use crate::error::{Error, Result};
use crate::linalg::mat::{Mat, Vector};

/// One cyclic summand of the decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicPiece {
    pub generator: Vector,
    pub degree: usize,
    /// Minimal polynomial of the generator (an invariant factor).
    pub invariant_factor: UniPoly,
}

/// `g(A)·v`.
pub fn poly_apply(a: &Mat, g: &UniPoly, v: &[Scalar]) -> Vector {
    let mut out = vec![a.field().zero(); v.len()];
    let mut pw = v.to_vec();
    for (i, c) in g.coeffs().iter().enumerate() {
        if i > 0 {
            pw = a.mul_vec(&pw);
        }
        if !c.is_zero() {
            for (o, x) in out.iter_mut().zip(&pw) {
                *o = &*o + &(c * x);
            }
        }
    }
    out
}

/// Krylov vectors `v, Av, …` up to the first dependence, with the monic minimal polynomial of `v`.
pub fn vector_minpoly(a: &Mat, v: &[Scalar]) -> (Vec<Vector>, UniPoly) {
    let f = a.field();
    let n = v.len();
    let mut krylov: Vec<Vector> = Vec::new();
    let mut cur = v.to_vec();
    loop {
        let mut cols = krylov.clone();
        let m = Mat::from_columns(f, n, &cols);
        if let Some(x) = (!krylov.is_empty()).then(|| m.solve(&cur)).flatten() {
            // cur = Σ x_i A^i v  ⇒  t^k − Σ x_i t^i
            let mut coeffs: Vec<Scalar> = x.iter().map(|c| -c).collect();
            coeffs.push(f.one());
            return (krylov, UniPoly::new(f, coeffs));
        }
        if cur.iter().all(Scalar::is_zero) {
            return (krylov, UniPoly::one(f));
        }
        cols.push(cur.clone());
        krylov = cols;
        cur = a.mul_vec(&cur);
    }
}

/// Splits `lcm(f, g)` into coprime `a | f`, `b | g` with `a·b = lcm(f, g)`.
fn coprime_split(f: &UniPoly, g: &UniPoly) -> (UniPoly, UniPoly) {
    let mut a = f.clone();
    let mut b = g.div_rem(&f.gcd(g)).0;
    loop {
        let d = a.gcd(&b);
        if d.degree() == Some(0) {
            return (a.monic(), b.monic());
        }
        a = a.div_rem(&d).0;
        b = b.mul(&d);
    }
}

/// A vector whose minimal polynomial equals the minimal polynomial of `a`.
fn max_vector(a: &Mat) -> (Vector, UniPoly) {
    let f = a.field();
    let n = a.rows();
    let unit = |i: usize| {
        let mut e = vec![f.zero(); n];
        e[i] = f.one();
        e
    };
    let mut v = unit(0);
    let mut mv = vector_minpoly(a, &v).1;
    for i in 1..n {
        let e = unit(i);
        let me = vector_minpoly(a, &e).1;
        if me.divides(&mv) {
            continue;
        }
        let (pa, pb) = coprime_split(&mv, &me);
        let x = poly_apply(a, &mv.div_rem(&pa).0, &v);
        let y = poly_apply(a, &me.div_rem(&pb).0, &e);
        v = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        mv = pa.mul(&pb);
        debug_assert_eq!(vector_minpoly(a, &v).1, mv);
    }
    (v, mv)
}

/// Cyclic decomposition `F^n = ⊕ F[A]·g_i`, degrees weakly decreasing.
pub fn frobenius(a: &Mat) -> Result<Vec<CyclicPiece>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("frobenius needs a square matrix".into()));
    }
    if a.det()?.is_zero() {
        return Err(Error::Singular);
    }
    Ok(decompose(a))
}

/// Same decomposition without the invertibility requirement.
pub fn decompose(a: &Mat) -> Vec<CyclicPiece> {
    let f = a.field();
    let n = a.rows();
    if n == 0 {
        return Vec::new();
    }
    let (v, mv) = max_vector(a);
    let k = mv.degree().expect("nonzero minimal polynomial");
    let krylov = vector_minpoly(a, &v).0;
    let mut pieces = vec![CyclicPiece { generator: v, degree: k, invariant_factor: mv }];
    if k == n {
        return pieces;
    }
    // φ with φ(A^i v) = δ_{i,k−1}; the complement is ⋂ ker(φ A^i)
    let kt = Mat::from_columns(f, n, &krylov).transpose();
    let mut rhs = vec![f.zero(); k];
    rhs[k - 1] = f.one();
    let phi = kt.solve(&rhs).expect("Krylov vectors are independent");
    let mut rows = Vec::with_capacity(k);
    let at = a.transpose();
    let mut cur = phi;
    for _ in 0..k {
        rows.push(cur.clone());
        cur = at.mul_vec(&cur);
    }
    let cons = Mat::from_rows(f, rows).expect("k rows of length n");
    let basis = cons.kernel();
    let b = Mat::from_columns(f, n, &basis);
    let sub = restrict(a, &b).expect("complement is invariant");
    for piece in decompose(&sub) {
        let g = b.mul_vec(&piece.generator);
        pieces.push(CyclicPiece { generator: g, ..piece });
    }
    pieces
}

/// Matrix of `a` restricted to the invariant subspace spanned by the columns of `basis`.
pub fn restrict(a: &Mat, basis: &Mat) -> Result<Mat> {
    let f = a.field();
    let d = basis.cols();
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let img = a.mul_vec(&basis.column(j));
        let x = basis
            .solve(&img)
            .ok_or_else(|| Error::Precondition("subspace is not invariant".into()))?;
        cols.push(x);
    }
    Ok(Mat::from_columns(f, d, &cols))
}

/// Invariant factors (monic), largest first.
pub fn invariant_factors(a: &Mat) -> Vec<UniPoly> {
    decompose(a).into_iter().map(|p| p.invariant_factor).collect()
}

/// True iff `A` and `A⁻¹` have the same invariant factors.
pub fn similar_to_inverse(a: &Mat) -> Result<bool> {
    let inv = a.inverse()?;
    Ok(invariant_factors(a) == invariant_factors(&inv))
}

/// Whether two square matrices are similar.
pub fn similar(a: &Mat, b: &Mat) -> bool {
    a.rows() == b.rows() && invariant_factors(a) == invariant_factors(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Field, QuadPoly};

    fn check_decomposition(a: &Mat, pieces: &[CyclicPiece]) {
        let f = a.field();
        let n = a.rows();
        let mut cols = Vec::new();
        for p in pieces {
            let (kr, mp) = vector_minpoly(a, &p.generator);
            assert_eq!(mp, p.invariant_factor);
            assert_eq!(kr.len(), p.degree);
            cols.extend(kr);
        }
        assert_eq!(Mat::from_columns(f, n, &cols).rank(), n);
        for w in pieces.windows(2) {
            assert!(w[0].degree >= w[1].degree);
            assert!(w[1].invariant_factor.divides(&w[0].invariant_factor));
        }
    }

    #[test]
    fn spec_examples() {
        let q = Field::Rational;
        let c = Mat::companion(&QuadPoly::parse("t^2-3*t+2", q).unwrap());
        let p = frobenius(&c).unwrap();
        assert_eq!(p.iter().map(|x| x.degree).collect::<Vec<_>>(), vec![2]);

        let p = frobenius(&Mat::identity(q, 2)).unwrap();
        assert_eq!(p.iter().map(|x| x.degree).collect::<Vec<_>>(), vec![1, 1]);

        let f5 = Field::prime(5).unwrap();
        let d = Mat::from_i64(f5, &[&[1, 0], &[0, 2]]);
        let p = frobenius(&d).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].generator, vec![f5.one(), f5.one()]);
        check_decomposition(&d, &p);
    }

    #[test]
    fn singular_rejected() {
        let q = Field::Rational;
        assert_eq!(frobenius(&Mat::zeros(q, 2, 2)), Err(Error::Singular));
    }

    #[test]
    fn mixed_blocks() {
        let f7 = Field::prime(7).unwrap();
        let a = Mat::from_i64(
            f7,
            &[
                &[2, 1, 0, 0, 0],
                &[0, 2, 0, 0, 0],
                &[0, 0, 2, 0, 0],
                &[0, 0, 0, 3, 1],
                &[0, 0, 0, 0, 3],
            ],
        );
        let p = frobenius(&a).unwrap();
        assert_eq!(p.iter().map(|x| x.degree).collect::<Vec<_>>(), vec![4, 1]);
        check_decomposition(&a, &p);
    }

    #[test]
    fn similar_to_inverse_examples() {
        let f5 = Field::prime(5).unwrap();
        assert!(similar_to_inverse(&Mat::from_i64(f5, &[&[0, 1], &[1, 0]])).unwrap());
        assert!(similar_to_inverse(&Mat::from_i64(f5, &[&[2, 0], &[0, 3]])).unwrap());
        assert!(!similar_to_inverse(&Mat::from_i64(f5, &[&[2, 0], &[0, 2]])).unwrap());
    }
}
