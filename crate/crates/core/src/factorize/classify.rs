use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{Field, QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::factorize::finite_rank::CoreModel;
use crate::opcore::RepAut;

/// Triples built from involutions and unipotents of index 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Three involutions; equivalently one involution and two unipotents.
    Involutions,
    Unipotents,
    /// One unipotent and two involutions.
    Mixed,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Involutions, Flavor::Unipotents, Flavor::Mixed];

    /// Recognizes a triple up to order and scaling.
    pub fn of(polys: [&QuadPoly; 3]) -> Option<Flavor> {
        let f = polys[0].field();
        let inv = QuadPoly::parse("t^2-1", f).ok()?;
        let uni = QuadPoly::parse("(t-1)^2", f).ok()?;
        let mut n_inv = 0;
        let mut n_uni = 0;
        for p in polys {
            let m = p.monic();
            if m == inv {
                n_inv += 1;
            } else if m == uni {
                n_uni += 1;
            }
        }
        match (n_inv, n_uni) {
            (3, 0) | (1, 2) => Some(Flavor::Involutions),
            (0, 3) => Some(Flavor::Unipotents),
            (2, 1) => Some(Flavor::Mixed),
            _ => None,
        }
    }

    /// The canonical triple of this flavor.
    pub fn polys(&self, f: Field) -> [QuadPoly; 3] {
        let inv = QuadPoly::parse("t^2-1", f).expect("valid");
        let uni = QuadPoly::parse("(t-1)^2", f).expect("valid");
        match self {
            Flavor::Involutions => [inv.clone(), inv.clone(), inv],
            Flavor::Unipotents => [uni.clone(), uni.clone(), uni],
            Flavor::Mixed => [uni, inv.clone(), inv],
        }
    }

    /// Condition on the dominant eigenvalue alone.
    pub fn scalar_ok(&self, lambda: &Scalar) -> bool {
        match self {
            Flavor::Involutions => lambda.pow(4).is_ok_and(|x| x.is_one()),
            Flavor::Unipotents | Flavor::Mixed => lambda.pow(2).is_ok_and(|x| x.is_one()),
        }
    }

    /// Label and description of the violated determinant condition, if any.
    pub fn determinant_obstruction(&self, lambda: &Scalar, d: &Scalar) -> Option<(&'static str, String)> {
        let one = lambda.field().one();
        let minus = -&one;
        match self {
            Flavor::Involutions => (!in_group(d, &[minus, lambda.clone()]))
                .then(|| ("(ii)", format!("induced determinant {d} is not ±{lambda}^k"))),
            Flavor::Unipotents if lambda.is_one() => {
                (!d.is_one()).then(|| ("(ii)", format!("induced determinant {d} is not 1")))
            }
            Flavor::Unipotents => {
                (!in_group(d, &[minus])).then(|| ("(iii)", format!("induced determinant {d} is neither 1 nor -1")))
            }
            Flavor::Mixed => {
                (!in_group(d, &[minus])).then(|| ("(ii)", format!("induced determinant {d} is neither 1 nor -1")))
            }
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Involutions => "involutions",
            Flavor::Unipotents => "unipotents",
            Flavor::Mixed => "mixed",
        })
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Flavor> {
        match s {
            "involutions" => Ok(Flavor::Involutions),
            "unipotents" => Ok(Flavor::Unipotents),
            "mixed" => Ok(Flavor::Mixed),
            _ => Err(Error::Malformed(format!("unknown flavor {s:?} (involutions | unipotents | mixed)"))),
        }
    }
}

/// Membership in the subgroup generated by elements of finite order.
fn in_group(d: &Scalar, gens: &[Scalar]) -> bool {
    let mut elems = vec![d.field().one()];
    let mut k = 0;
    while k < elems.len() {
        for g in gens {
            let x = &elems[k] * g;
            if !elems.contains(&x) {
                if elems.len() > 64 {
                    return false;
                }
                elems.push(x);
            }
        }
        k += 1;
    }
    elems.contains(d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub flavor: Flavor,
    pub product: bool,
    /// The violated condition, `(i)`, `(ii)` or `(iii)`.
    pub condition: Option<String>,
    pub reasons: Vec<String>,
}

/// Whether `u` is a product of three factors of the given flavor.
pub fn classify3(u: &RepAut, flavor: Flavor) -> Result<Decision> {
    let Some(core) = CoreModel::of(u)? else {
        return Ok(Decision {
            flavor,
            product: true,
            condition: None,
            reasons: vec!["no dominant eigenvalue".into()],
        });
    };
    let lambda = &core.lambda;
    let mut reasons = vec![format!("dominant eigenvalue {lambda}")];
    if !flavor.scalar_ok(lambda) {
        let bound = if flavor == Flavor::Involutions { "λ⁴ ≠ 1" } else { "λ² ≠ 1" };
        reasons.push(format!("{bound} for λ = {lambda}"));
        return Ok(Decision { flavor, product: false, condition: Some("(i)".into()), reasons });
    }
    let d = core.induced_det()?;
    reasons.push(format!("induced determinant {d}"));
    if let Some((label, why)) = flavor.determinant_obstruction(lambda, &d) {
        reasons.push(why);
        return Ok(Decision { flavor, product: false, condition: Some(label.into()), reasons });
    }
    Ok(Decision { flavor, product: true, condition: None, reasons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::opcore::{BasisIndex, LinComb};

    fn perturbed(f: Field, lambda: i64, w: i64) -> RepAut {
        let e = BasisIndex::periodic("P0", 0, 0);
        RepAut::builder(f)
            .periodic("P0", Mat::scalar(&f.from_i64(lambda), 1))
            .perturb(e.clone(), LinComb::term(e, f.from_i64(w)))
            .build()
            .unwrap()
    }

    #[test]
    fn examples() {
        let f7 = Field::prime(7).unwrap();
        let d = classify3(&RepAut::scalar(&f7.from_i64(3)).unwrap(), Flavor::Involutions).unwrap();
        assert!(!d.product);
        assert_eq!(d.condition.as_deref(), Some("(i)"));

        let f5 = Field::prime(5).unwrap();
        for fl in Flavor::ALL {
            assert!(classify3(&RepAut::shift(f5), fl).unwrap().product);
        }
        // 1 + 1 = 2 on the one-dimensional image
        let d = classify3(&perturbed(f5, 1, 1), Flavor::Unipotents).unwrap();
        assert!(!d.product);
        assert_eq!(d.condition.as_deref(), Some("(ii)"));
        // λ = -1, determinant -1 + 1 = 0 is impossible, use -1 + 2 = 1
        assert!(classify3(&perturbed(f5, -1, 2), Flavor::Unipotents).unwrap().product);
        assert_eq!(classify3(&perturbed(f5, -1, 3), Flavor::Unipotents).unwrap().condition.as_deref(), Some("(iii)"));
        // λ = 2 has order 4 in F_5, so every determinant is ±2^k
        assert!(classify3(&perturbed(f5, 2, 1), Flavor::Involutions).unwrap().product);
        assert_eq!(classify3(&perturbed(f5, 2, 1), Flavor::Mixed).unwrap().condition.as_deref(), Some("(i)"));
    }

    #[test]
    fn flavor_recognition() {
        let f = Field::prime(7).unwrap();
        let inv = QuadPoly::parse("2t^2-2", f).unwrap();
        let uni = QuadPoly::parse("(t-1)^2", f).unwrap();
        assert_eq!(Flavor::of([&inv, &inv, &inv]), Some(Flavor::Involutions));
        assert_eq!(Flavor::of([&uni, &inv, &uni]), Some(Flavor::Involutions));
        assert_eq!(Flavor::of([&uni, &uni, &uni]), Some(Flavor::Unipotents));
        assert_eq!(Flavor::of([&inv, &uni, &inv]), Some(Flavor::Mixed));
        let other = QuadPoly::parse("(t-2)(t-3)", f).unwrap();
        assert_eq!(Flavor::of([&inv, &inv, &other]), None);
        for fl in Flavor::ALL {
            let ps = fl.polys(f);
            assert_eq!(Flavor::of([&ps[0], &ps[1], &ps[2]]), Some(fl));
            assert_eq!(fl.to_string().parse::<Flavor>().unwrap(), fl);
        }
    }
}
