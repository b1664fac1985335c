use std::collections::HashMap;

use crate::opcore::{BasisIndex, LinComb};

/// Sparse echelon basis of a finite-dimensional span of linear combinations.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    rows: Vec<LinComb>,
    pivots: HashMap<BasisIndex, usize>,
}

impl Echelon {
    pub fn new() -> Echelon {
        Echelon::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn reduce(&self, x: &LinComb) -> LinComb {
        let mut rem = x.clone();
        let mut bound: Option<BasisIndex> = None;
        loop {
            let hit = match &bound {
                Some(b) => rem.iter_below(b).find(|(i, _)| self.pivots.contains_key(*i)),
                None => rem.iter().rev().find(|(i, _)| self.pivots.contains_key(*i)),
            }
            .map(|(i, c)| (i.clone(), c.clone()));
            let Some((i, c)) = hit else { return rem };
            rem.add_scaled(&self.rows[self.pivots[&i]], &-&c);
            bound = Some(i);
        }
    }

    pub fn contains(&self, x: &LinComb) -> bool {
        self.reduce(x).is_zero()
    }

    /// Adds `x`; returns false if it was already in the span.
    pub fn insert(&mut self, x: &LinComb) -> bool {
        let rem = self.reduce(x);
        let Some(p) = rem.max_index().cloned() else { return false };
        let inv = rem.get(&p).expect("pivot").inv().expect("nonzero pivot");
        self.pivots.insert(p, self.rows.len());
        self.rows.push(rem.scale(&inv));
        true
    }

    /// Echelon rows, in insertion order.
    pub fn rows(&self) -> &[LinComb] {
        &self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;

    #[test]
    fn detects_dependence() {
        let f = Field::prime(7).unwrap();
        let e = |k| BasisIndex::new("S0", k);
        let mut s = Echelon::new();
        assert!(s.insert(&LinComb::from_terms([(e(0), f.one()), (e(1), f.one())])));
        assert!(s.insert(&LinComb::unit(e(1), f)));
        assert!(!s.insert(&LinComb::unit(e(0), f)));
        assert!(s.contains(&LinComb::term(e(0), f.from_i64(3))));
        assert!(!s.contains(&LinComb::unit(e(2), f)));
        assert_eq!(s.len(), 2);
    }
}
