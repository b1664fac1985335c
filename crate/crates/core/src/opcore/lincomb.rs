use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::Scalar;
use crate::opcore::index::BasisIndex;

/// Finite linear combination of basis vectors; zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinComb {
    terms: BTreeMap<BasisIndex, Scalar>,
}

impl LinComb {
    pub fn zero() -> LinComb {
        LinComb::default()
    }

    pub fn unit(i: BasisIndex, field: crate::algebra::Field) -> LinComb {
        LinComb::term(i, field.one())
    }

    pub fn term(i: BasisIndex, c: Scalar) -> LinComb {
        let mut out = LinComb::zero();
        out.add_term(i, c);
        out
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (BasisIndex, Scalar)>) -> LinComb {
        let mut out = LinComb::zero();
        for (i, c) in terms {
            out.add_term(i, c);
        }
        out
    }

    pub fn add_term(&mut self, i: BasisIndex, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(i) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &LinComb, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (i, x) in &other.terms {
            self.add_term(i.clone(), x * c);
        }
    }

    pub fn add(&self, other: &LinComb) -> LinComb {
        let mut out = self.clone();
        for (i, x) in &other.terms {
            out.add_term(i.clone(), x.clone());
        }
        out
    }

    pub fn sub(&self, other: &LinComb) -> LinComb {
        let mut out = self.clone();
        for (i, x) in &other.terms {
            out.add_term(i.clone(), -x);
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> LinComb {
        if c.is_zero() {
            return LinComb::zero();
        }
        LinComb { terms: self.terms.iter().map(|(i, x)| (i.clone(), x * c)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, i: &BasisIndex) -> Option<&Scalar> {
        self.terms.get(i)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (&BasisIndex, &Scalar)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &BasisIndex> {
        self.terms.keys()
    }

    /// Terms with index strictly below `bound`, largest first.
    pub fn iter_below<'a>(&'a self, bound: &BasisIndex) -> impl Iterator<Item = (&'a BasisIndex, &'a Scalar)> {
        self.terms.range(..bound.clone()).rev()
    }

    pub fn max_index(&self) -> Option<&BasisIndex> {
        self.terms.keys().next_back()
    }

    pub fn remove(&mut self, i: &BasisIndex) -> Option<Scalar> {
        self.terms.remove(i)
    }

    /// Splits off the terms whose index satisfies `pred`.
    pub fn partition(&self, pred: impl Fn(&BasisIndex) -> bool) -> (LinComb, LinComb) {
        let mut yes = LinComb::zero();
        let mut no = LinComb::zero();
        for (i, x) in &self.terms {
            if pred(i) {
                yes.terms.insert(i.clone(), x.clone());
            } else {
                no.terms.insert(i.clone(), x.clone());
            }
        }
        (yes, no)
    }
}

impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, x)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{x}·{i}")?;
        }
        Ok(())
    }
}

impl Serialize for LinComb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(&BasisIndex, &Scalar)> = self.terms.iter().collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinComb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<LinComb, D::Error> {
        let v: Vec<(BasisIndex, Scalar)> = Vec::deserialize(d)?;
        Ok(LinComb::from_terms(v))
    }
}
