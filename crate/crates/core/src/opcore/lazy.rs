use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Field, QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::opcore::index::BasisIndex;
use crate::opcore::lincomb::LinComb;
use crate::opcore::report::{CheckReport, Failure};
use crate::opcore::repaut::RepAut;
use crate::opcore::rule::{apply_comb, Rule, RuleSpec};
use crate::opcore::window::Window;

/// How the inverse of a [`LazyOp`] is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The operator is annihilated by this non-derogatory polynomial.
    Annihilator { poly: QuadPoly },
    /// An explicit inverse rule.
    Inverse { rule: Box<RuleSpec> },
    None,
}

/// A rule-defined, locally finite operator together with an inverse witness.
#[derive(Clone)]
pub struct LazyOp {
    spec: RuleSpec,
    witness: Witness,
    rule: Arc<dyn Rule>,
}

impl fmt::Debug for LazyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyOp").field("spec", &self.spec.kind_name()).field("witness", &self.witness).finish()
    }
}

impl PartialEq for LazyOp {
    fn eq(&self, o: &LazyOp) -> bool {
        self.spec == o.spec && self.witness == o.witness
    }
}

impl Rule for RepAut {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        RepAut::apply(self, i)
    }
}

impl Rule for LazyOp {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        self.rule.apply(i)
    }
}

impl LazyOp {
    pub fn new(spec: RuleSpec, witness: Witness) -> Result<LazyOp> {
        let rule = spec.compile()?;
        Ok(LazyOp { spec, witness, rule })
    }

    /// An operator annihilated by `p`.
    pub fn quadratic(spec: RuleSpec, p: QuadPoly) -> Result<LazyOp> {
        LazyOp::new(spec, Witness::Annihilator { poly: p })
    }

    pub fn scalar(value: &Scalar) -> Result<LazyOp> {
        let inv = value.inv()?;
        LazyOp::new(
            RuleSpec::Scalar { value: value.clone() },
            Witness::Inverse { rule: Box::new(RuleSpec::Scalar { value: inv }) },
        )
    }

    pub fn identity(field: Field) -> LazyOp {
        LazyOp::scalar(&field.one()).expect("one is invertible")
    }

    pub fn from_aut(u: &RepAut) -> LazyOp {
        LazyOp::new(
            RuleSpec::Aut { op: u.clone() },
            Witness::Inverse { rule: Box::new(RuleSpec::AutInverse { op: u.clone() }) },
        )
        .expect("a valid RepAut compiles")
    }

    pub fn spec(&self) -> &RuleSpec {
        &self.spec
    }

    pub fn witness(&self) -> &Witness {
        &self.witness
    }

    pub fn annihilator(&self) -> Option<&QuadPoly> {
        match &self.witness {
            Witness::Annihilator { poly } => Some(poly),
            _ => None,
        }
    }

    pub fn rule(&self) -> &Arc<dyn Rule> {
        &self.rule
    }

    pub fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        self.rule.apply(i)
    }

    pub fn apply_comb(&self, x: &LinComb) -> Result<LinComb> {
        apply_comb(self.rule.as_ref(), x)
    }

    fn inverse_spec(&self) -> Result<RuleSpec> {
        match &self.witness {
            Witness::Annihilator { poly } => {
                if !poly.is_non_derogatory() {
                    return Err(Error::DerogatoryInput);
                }
                Ok(RuleSpec::QuadInverse { op: Box::new(self.spec.clone()), annihilator: poly.clone() })
            }
            Witness::Inverse { rule } => Ok((**rule).clone()),
            Witness::None => Err(Error::NoWitness),
        }
    }

    /// The inverse; an annihilator `p` becomes `p#` on the inverse.
    pub fn invert(&self) -> Result<LazyOp> {
        let spec = self.inverse_spec()?;
        let witness = match &self.witness {
            Witness::Annihilator { poly } => Witness::Annihilator { poly: poly.reciprocal()? },
            _ => Witness::Inverse { rule: Box::new(self.spec.clone()) },
        };
        LazyOp::new(spec, witness)
    }

    /// `ops[0] ∘ ops[1] ∘ …`, with the inverse witness composed in reverse.
    pub fn compose(ops: &[LazyOp]) -> Result<LazyOp> {
        if ops.is_empty() {
            return Err(Error::ShapeMismatch("nothing to compose".into()));
        }
        if ops.len() == 1 {
            return Ok(ops[0].clone());
        }
        let spec = RuleSpec::Compose { ops: ops.iter().map(|o| o.spec.clone()).collect() };
        let inverses: Result<Vec<RuleSpec>> = ops.iter().rev().map(LazyOp::inverse_spec).collect();
        let witness = match inverses {
            Ok(inv) => Witness::Inverse { rule: Box::new(RuleSpec::Compose { ops: inv }) },
            Err(_) => Witness::None,
        };
        let rule = spec.compile()?;
        Ok(LazyOp { spec, witness, rule })
    }
}

impl Serialize for LazyOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rule: &'a RuleSpec,
            witness: &'a Witness,
        }
        Repr { rule: &self.spec, witness: &self.witness }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LazyOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<LazyOp, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            rule: RuleSpec,
            witness: Witness,
        }
        let r = Repr::deserialize(d)?;
        LazyOp::new(r.rule, r.witness).map_err(serde::de::Error::custom)
    }
}

fn run_check(
    name: String,
    window: &Window,
    check: impl Fn(&BasisIndex) -> Result<Option<String>> + Sync,
) -> CheckReport {
    let failures: Vec<Failure> = window
        .indices()
        .par_iter()
        .filter_map(|i| match check(i) {
            Ok(None) => None,
            Ok(Some(detail)) => Some(Failure { index: Some(i.clone()), detail }),
            Err(e) => Some(Failure { index: Some(i.clone()), detail: e.to_string() }),
        })
        .collect();
    CheckReport::from_outcomes(name, window.len(), failures)
}

/// `p(op)(e_i) = 0` for every `i` in the window.
pub fn check_annihilated(op: &dyn Rule, p: &QuadPoly, window: &Window) -> CheckReport {
    run_check(format!("annihilated by {p}"), window, |i| {
        let x = op.apply(i)?;
        let y = apply_comb(op, &x)?;
        let mut r = y.scale(p.leading());
        r.add_scaled(&x, p.c1());
        r.add_term(i.clone(), p.c0().clone());
        Ok((!r.is_zero()).then(|| format!("residual {r}")))
    })
}

/// `op1(e_i) = op2(e_i)` for every `i` in the window.
pub fn equal_on_window(op1: &dyn Rule, op2: &dyn Rule, window: &Window) -> CheckReport {
    equal_on_window_named("operators agree", op1, op2, window)
}

pub fn equal_on_window_named(name: &str, op1: &dyn Rule, op2: &dyn Rule, window: &Window) -> CheckReport {
    run_check(name.to_string(), window, |i| {
        let a = op1.apply(i)?;
        let b = op2.apply(i)?;
        Ok((a != b).then(|| format!("{a} vs {b}")))
    })
}

/// `op(inv(e_i)) = e_i` and `inv(op(e_i)) = e_i` on the window.
pub fn check_inverse(op: &LazyOp, window: &Window) -> CheckReport {
    let inv = match op.invert() {
        Ok(x) => x,
        Err(e) => {
            let mut r = CheckReport::new("inverse witness");
            r.record(false, None, || e.to_string());
            return r;
        }
    };
    run_check("inverse witness".into(), window, |i| {
        let a = op.apply_comb(&inv.apply(i)?)?;
        let b = inv.apply_comb(&op.apply(i)?)?;
        let unit_ok = |x: &LinComb| x.len() == 1 && x.get(i).is_some_and(Scalar::is_one);
        Ok((!(unit_ok(&a) && unit_ok(&b))).then(|| format!("{a} / {b}")))
    })
}
