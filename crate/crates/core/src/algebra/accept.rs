use serde::{Deserialize, Serialize};

use crate::algebra::field::Scalar;
use crate::algebra::poly::QuadPoly;
use crate::error::{Error, Result};

/// Verdict of the acceptability test for a scalar against a polynomial triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Acceptability {
    /// `λ = ω1·ω2·ω3` with `ωi` a root of `pi`.
    ProductOfRoots { witness: [Scalar; 3] },
    /// `λ² = N(p1)·N(p2)·N(p3)`.
    NormSquare,
    No,
}

impl Acceptability {
    pub fn is_acceptable(&self) -> bool {
        !matches!(self, Acceptability::No)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Acceptability::ProductOfRoots { .. } => "ProductOfRoots",
            Acceptability::NormSquare => "NormSquare",
            Acceptability::No => "No",
        }
    }
}

fn root_list(p: &QuadPoly) -> Result<Vec<Scalar>> {
    let (x, y) = p.roots().ok_or(Error::NotSplit)?;
    // the root 1 is tried first so that witnesses stay trivial when possible
    Ok(if x == y {
        vec![x]
    } else if y.is_one() {
        vec![y, x]
    } else {
        vec![x, y]
    })
}

pub fn acceptable(lambda: &Scalar, polys: [&QuadPoly; 3]) -> Result<Acceptability> {
    if lambda.is_zero() {
        return Err(Error::ZeroLambda);
    }
    for p in polys {
        if !p.is_non_derogatory() {
            return Err(Error::DerogatoryInput);
        }
    }
    let r1 = root_list(polys[0])?;
    let r2 = root_list(polys[1])?;
    let r3 = root_list(polys[2])?;
    for a in &r1 {
        for b in &r2 {
            for c in &r3 {
                if &(&(a * b) * c) == lambda {
                    return Ok(Acceptability::ProductOfRoots { witness: [a.clone(), b.clone(), c.clone()] });
                }
            }
        }
    }
    let norms = &(&polys[0].norm() * &polys[1].norm()) * &polys[2].norm();
    if (lambda * lambda) == norms {
        return Ok(Acceptability::NormSquare);
    }
    Ok(Acceptability::No)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::field::Field;

    fn triple(f: Field, s: &str) -> QuadPoly {
        QuadPoly::parse(s, f).unwrap()
    }

    #[test]
    fn examples() {
        let q = Field::Rational;
        let p = triple(q, "t^2-1");
        let got = acceptable(&q.one(), [&p, &p, &p]).unwrap();
        assert_eq!(got, Acceptability::ProductOfRoots { witness: [q.one(), q.one(), q.one()] });

        let f5 = Field::prime(5).unwrap();
        let p = triple(f5, "t^2-1");
        assert_eq!(acceptable(&f5.from_i64(2), [&p, &p, &p]).unwrap(), Acceptability::NormSquare);

        let f7 = Field::prime(7).unwrap();
        let p = triple(f7, "t^2-1");
        assert_eq!(acceptable(&f7.from_i64(3), [&p, &p, &p]).unwrap(), Acceptability::No);
    }

    #[test]
    fn errors() {
        let f5 = Field::prime(5).unwrap();
        let p = triple(f5, "t^2-1");
        assert_eq!(acceptable(&f5.zero(), [&p, &p, &p]), Err(Error::ZeroLambda));
        let irr = triple(f5, "t^2-2");
        assert_eq!(acceptable(&f5.one(), [&irr, &p, &p]), Err(Error::NotSplit));
    }

    #[test]
    fn involution_triples_accept_fourth_roots_of_unity() {
        for p in [3u64, 5, 7, 11, 13] {
            let f = Field::prime(p).unwrap();
            let t = triple(f, "t^2-1");
            for l in f.elements().unwrap().skip(1) {
                let verdict = acceptable(&l, [&t, &t, &t]).unwrap();
                assert_eq!(verdict.is_acceptable(), l.pow(4).unwrap().is_one(), "p={p} l={l}");
            }
        }
    }
}
