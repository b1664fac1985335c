use serde::{Deserialize, Serialize};

use crate::algebra::{QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::glsearch::enumerate::Budget;
use crate::glsearch::membership::product_membership;
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableHit {
    /// Least padding `q` with `A ⊕ λI_q` a product.
    pub q: usize,
    /// Witness factors of `A ⊕ λI_q`.
    pub factors: Vec<Mat>,
    /// Outcome of re-running the search at `q + 2`, when that fit in `qmax` and the budget.
    pub parity_checked: Option<bool>,
}

fn pad(a: &Mat, lambda: &Scalar, q: usize) -> Mat {
    a.direct_sum(&Mat::scalar(lambda, q))
}

fn is_scalar(a: &Mat, lambda: &Scalar) -> bool {
    *a == Mat::scalar(lambda, a.rows())
}

/// Factorization of `λI_m` by direct sums of 1×1 and 2×2 witnesses.
///
/// Every composition factor of a space carrying `λ·id = abc` has dimension 1 or 2, so `λI_m`
/// is a product exactly when `m` is a sum of the dimensions that work on their own.
fn central(lambda: &Scalar, m: usize, polys: &[QuadPoly], budget: &Budget) -> Result<Option<Vec<Mat>>> {
    if m <= 2 && m <= budget.max_dim {
        return product_membership(&Mat::scalar(lambda, m), polys, budget);
    }
    let one = product_membership(&Mat::scalar(lambda, 1), polys, budget)?;
    let two = if one.is_some() { None } else { product_membership(&Mat::scalar(lambda, 2), polys, budget)? };
    let (piece, size) = match (one, two) {
        (Some(w), _) => (w, 1),
        (None, Some(w)) if m.is_multiple_of(2) => (w, 2),
        _ => return Ok(None),
    };
    let f = lambda.field();
    Ok(Some(
        piece
            .iter()
            .map(|x| (0..m / size).fold(Mat::zeros(f, 0, 0), |acc, _| acc.direct_sum(x)))
            .collect(),
    ))
}

fn member(a: &Mat, lambda: &Scalar, q: usize, polys: &[QuadPoly], budget: &Budget) -> Result<Option<Vec<Mat>>> {
    let m = a.rows() + q;
    if is_scalar(a, lambda) {
        return central(lambda, m, polys, budget);
    }
    if m > budget.max_dim {
        return Err(Error::BudgetExceeded(format!("padded dimension {m} > {}", budget.max_dim)));
    }
    product_membership(&pad(a, lambda, q), polys, budget)
}

/// Least `q ≤ qmax` with `A ⊕ λI_q` a product of three factors annihilated by `polys`.
pub fn lambda_stable_search(
    a: &Mat,
    lambda: &Scalar,
    polys: &[QuadPoly; 3],
    qmax: usize,
    budget: &Budget,
) -> Result<Option<StableHit>> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("A must be square".into()));
    }
    if lambda.is_zero() {
        return Err(Error::ZeroLambda);
    }
    for q in 0..=qmax {
        if a.rows() + q == 0 {
            continue;
        }
        let Some(factors) = member(a, lambda, q, polys, budget)? else { continue };
        let parity_checked = if q + 2 <= qmax {
            match member(a, lambda, q + 2, polys, budget) {
                Ok(w) => Some(w.is_some()),
                Err(Error::BudgetExceeded(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        return Ok(Some(StableHit { q, factors, parity_checked }));
    }
    Ok(None)
}
