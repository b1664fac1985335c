use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::opcore::{BasisIndex, LazyOp, LinComb, Rule, RuleSpec};

/// Block of the abstract basis `(x_n)_{n ≥ 0}`.
pub const PAIR_BLOCK: &str = "X";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFactor {
    A,
    B,
}

/// One factor of the shift pair for `(p, q)` on the abstract block `X`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftPairSpec {
    pub p: QuadPoly,
    pub q: QuadPoly,
    pub factor: PairFactor,
}

struct ShiftPairRule {
    block: Arc<str>,
    factor: PairFactor,
    alpha: Scalar,
    beta: Scalar,
    lambda_q: Scalar,
    mu_q: Scalar,
}

impl ShiftPairSpec {
    pub fn compile(&self) -> Result<Arc<dyn Rule>> {
        let (alpha, beta) = self.p.roots().ok_or(Error::NotSplit)?;
        let (mu, lambda) = self.q.norm_trace();
        Ok(Arc::new(ShiftPairRule {
            block: Arc::from(PAIR_BLOCK),
            factor: self.factor,
            alpha,
            beta,
            lambda_q: lambda,
            mu_q: -mu,
        }))
    }
}

impl Rule for ShiftPairRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        if *i.block != *self.block || i.copy.is_some() || i.slot < 0 {
            return Err(Error::UnknownIndex(i.to_string()));
        }
        let x = |n: i64| BasisIndex::with_block(&self.block, None, n);
        let n = i.slot;
        let one = self.alpha.field().one();
        Ok(match (self.factor, n % 2 == 0) {
            (PairFactor::A, true) => LinComb::from_terms([(x(n), self.alpha.clone()), (x(n + 3), one)]),
            (PairFactor::A, false) => LinComb::term(x(n), self.beta.clone()),
            (PairFactor::B, true) => LinComb::term(x(n + 1), one),
            (PairFactor::B, false) => {
                LinComb::from_terms([(x(n - 1), self.mu_q.clone()), (x(n), self.lambda_q.clone())])
            }
        })
    }
}

/// The pair `(a, b)` with `p(a) = 0`, `q(b) = 0` and `ab` super-elementary with cyclic vector `x₁`.
pub fn shift_pair(p: &QuadPoly, q: &QuadPoly) -> Result<(LazyOp, LazyOp)> {
    if !p.is_split() {
        return Err(Error::NotSplit);
    }
    if !p.is_non_derogatory() || !q.is_non_derogatory() {
        return Err(Error::DerogatoryInput);
    }
    let spec = |factor| RuleSpec::ShiftPair(ShiftPairSpec { p: p.clone(), q: q.clone(), factor });
    let a = LazyOp::quadratic(spec(PairFactor::A), p.clone())?;
    let b = LazyOp::quadratic(spec(PairFactor::B), q.clone())?;
    Ok((a, b))
}

/// `x_n` in the abstract block.
pub fn pair_index(n: i64) -> BasisIndex {
    BasisIndex::new(PAIR_BLOCK, n)
}
