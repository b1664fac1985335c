use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{QuadPoly, Scalar};
use crate::error::{Error, Refusal, Result};
use crate::factorize::transport::Component;
use crate::linalg::Mat;
use crate::modulestruct::{adjust_reps, is_semi_good, quotient_strata, shift_copies, Dim, Stratification, Stratum};
use crate::opcore::{Action, BasisIndex, LazyOp, LinComb, RepAut, Rule, RuleSpec};

/// An adjacency operator `a` with `v = a∘u`, and the cyclic components of `v`.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub a: LazyOp,
    pub v: LazyOp,
    pub components: Vec<Component>,
}

fn split_roots(p: &QuadPoly) -> Result<(Scalar, Scalar)> {
    if !p.is_non_derogatory() {
        return Err(Error::DerogatoryInput);
    }
    p.roots().ok_or(Error::NotSplit)
}

fn unsupported(msg: &str) -> Error {
    Error::Refused(Refusal::Unsupported(msg.into()))
}

fn coords(idx: &[BasisIndex], x: &LinComb, zero: &Scalar) -> Vec<Scalar> {
    idx.iter().map(|i| x.get(i).cloned().unwrap_or_else(|| zero.clone())).collect()
}

/// Images `a(e_i)` for `i ∈ idx`, given a basis `ys` of `span(idx)` (modulo vectors outside `idx`
/// handled by `rest`) and the prescribed images `a(y)`.
fn solve_images(
    idx: &[BasisIndex],
    ys: &[LinComb],
    images: &[LinComb],
    rest: impl Fn(&LinComb) -> Result<LinComb>,
) -> Result<Vec<(BasisIndex, LinComb)>> {
    if idx.is_empty() {
        return Ok(Vec::new());
    }
    let f = ys
        .iter()
        .flat_map(|y| y.iter().map(|(_, c)| c.field()))
        .next()
        .ok_or_else(|| Error::Precondition("empty basis for a nonempty region".into()))?;
    if ys.len() != idx.len() {
        return Err(Error::Precondition(format!("{} basis vectors for a region of dimension {}", ys.len(), idx.len())));
    }
    let zero = f.zero();
    let cols: Vec<_> = ys.iter().map(|y| coords(idx, y, &zero)).collect();
    let pinv = Mat::from_columns(f, idx.len(), &cols)
        .inverse()
        .map_err(|_| Error::Precondition("strata vectors do not form a basis of their region".into()))?;
    let mut out = Vec::with_capacity(idx.len());
    for (r, i) in idx.iter().enumerate() {
        let mut img = LinComb::zero();
        let mut residue = LinComb::unit(i.clone(), f);
        for (b, y) in ys.iter().enumerate() {
            let c = pinv.get(b, r);
            img.add_scaled(&images[b], c);
            residue.add_scaled(y, &-c);
        }
        let (inside, outside) = residue.partition(|k| idx.contains(k));
        debug_assert!(inside.is_zero());
        img = img.add(&rest(&outside)?);
        out.push((i.clone(), img));
    }
    Ok(out)
}

/// The adjacency operator of a shift-containing automorphism, as a finite table with tail `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeAdjacencySpec {
    pub ambient: RepAut,
    pub p: QuadPoly,
}

impl FreeAdjacencySpec {
    pub fn compile(&self) -> Result<Arc<dyn Rule>> {
        let (entries, tail) = free_table(&self.ambient, &self.p)?;
        RuleSpec::Table { entries, tail }.compile()
    }
}

fn check_free_scope(u: &RepAut) -> Result<()> {
    let Some(s) = u.shift_blocks().first() else { return Err(Error::NoFreePart) };
    if !u.perturbation().is_empty() {
        return Err(unsupported("perturbed shift-containing operators"));
    }
    if u.coupling().iter().any(|a| a.image.support().any(|i| i.block != s.id)) {
        return Err(unsupported("coupling into a shift block other than the first"));
    }
    Ok(())
}

/// `a(u^{k+1}c) = x_k`, `a(x_k) = λx_k + μu^{k+1}c`, `α` elsewhere, in standard coordinates.
fn free_table(u: &RepAut, p: &QuadPoly) -> Result<(Vec<Action>, Scalar)> {
    check_free_scope(u)?;
    let (alpha, _) = split_roots(p)?;
    let (norm, lambda) = p.norm_trace();
    let mu = -&norm;
    let strata = quotient_strata(u)?;
    let gens: Vec<LinComb> = strata.iter().map(|s| s.generator.clone()).collect();
    let xs = adjust_reps(u, &gens)?;
    let s = &u.shift_blocks()[0];
    let e = |j: i64| BasisIndex::with_block(&s.id, None, j);
    let d = xs.len() as i64;
    // a on a vector supported in the first shift block
    let a_shift = |x: &LinComb| -> Result<LinComb> {
        let mut out = LinComb::zero();
        for (i, c) in x.iter() {
            if i.block != s.id {
                return Err(Error::Precondition(format!("{i} outside the first shift block")));
            }
            if (1..=d).contains(&i.slot) {
                let scale = s.multiplier.pow(-i.slot)?;
                out.add_scaled(&xs[(i.slot - 1) as usize], &(c * &scale));
            } else {
                out.add_term(i.clone(), c * &alpha);
            }
        }
        Ok(out)
    };
    let mut ys = Vec::new();
    let mut images = Vec::new();
    for (k, (x, st)) in xs.iter().zip(&strata).enumerate() {
        let Dim::Finite(n) = st.dim else { unreachable!("quotient strata are finite") };
        let top = s.multiplier.pow(k as i64 + 1)?;
        let mut img = x.scale(&lambda);
        img.add_term(e(k as i64 + 1), &mu * &top);
        let mut y = x.clone();
        for l in 0..n {
            if l > 0 {
                y = u.apply_comb(&y)?;
                img = y.scale(&alpha);
            }
            ys.push(y.clone());
            images.push(img.clone());
        }
    }
    let mut entries: Vec<Action> = solve_images(&u.finite_indices(), &ys, &images, a_shift)?
        .into_iter()
        .map(|(from, image)| Action { from, image })
        .collect();
    for (k, x) in xs.iter().enumerate() {
        let j = k as i64 + 1;
        entries.push(Action { from: e(j), image: x.scale(&s.multiplier.pow(-j)?) });
    }
    Ok((entries, alpha))
}

/// `p`-adjacency for an automorphism with a free part: `p(a) = 0` and `v = a∘u` elementary.
///
/// The first component is generated by slot 0 of the first shift block and carries the finite
/// blocks; every further shift block is an `α`-scaled shift.
pub fn adjacency_free(u: &RepAut, p: &QuadPoly) -> Result<Adjacency> {
    check_free_scope(u)?;
    split_roots(p)?;
    let a = LazyOp::quadratic(RuleSpec::AdjacencyFree(FreeAdjacencySpec { ambient: u.clone(), p: p.clone() }), p.clone())?;
    let v = LazyOp::compose(&[a.clone(), LazyOp::from_aut(u)])?;
    let f = u.field();
    let mut components = Vec::new();
    for (k, b) in u.shift_blocks().iter().enumerate() {
        let mut blocks = vec![b.id.clone()];
        if k == 0 {
            blocks.extend(u.finite_blocks().iter().map(|x| x.id.clone()));
        }
        components.push(Component { generator: LinComb::unit(BasisIndex::with_block(&b.id, None, 0), f), blocks });
    }
    Ok(Adjacency { a, v, components })
}

/// The adjacency operator built from a semi-good stratification of a torsion automorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratAdjacencySpec {
    pub ambient: RepAut,
    pub strat: Stratification,
    pub p: QuadPoly,
}

struct StratRule {
    prefix: HashMap<BasisIndex, LinComb>,
    group0: HashMap<BasisIndex, LinComb>,
    from: u64,
    group: u64,
}

impl Rule for StratRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        let unknown = || Error::UnknownIndex(i.to_string());
        match i.copy {
            Some(c) if c >= self.from => {
                let j = (c - self.from) / self.group;
                let base = BasisIndex::with_block(&i.block, Some(c - j * self.group), i.slot);
                Ok(shift_copies(self.group0.get(&base).ok_or_else(unknown)?, j * self.group))
            }
            _ => self.prefix.get(i).cloned().ok_or_else(unknown),
        }
    }
}

fn all_infinite(s: &Stratification) -> bool {
    let tail = s.tail_rule.iter().flat_map(|t| &t.template);
    s.prefix.iter().chain(tail).all(|st| st.dim == Dim::Infinite)
}

impl StratAdjacencySpec {
    pub fn compile(&self) -> Result<Arc<dyn Rule>> {
        let (lambda, mu) = split_roots(&self.p)?;
        if all_infinite(&self.strat) {
            return RuleSpec::Scalar { value: lambda }.compile();
        }
        let u = &self.ambient;
        let s = &self.strat;
        let t = s
            .tail_rule
            .as_ref()
            .filter(|t| !t.template.is_empty())
            .ok_or_else(|| Error::NotSemiGood("no tail rule".into()))?;
        if !u.shift_blocks().is_empty() || s.prefix.iter().chain(&t.template).any(|x| x.dim == Dim::Infinite) {
            return Err(unsupported("stratifications mixing finite and infinite strata"));
        }
        let region = |k0: usize, k1: usize, idx: Vec<BasisIndex>| -> Result<HashMap<BasisIndex, LinComb>> {
            let mut ys = Vec::new();
            let mut images = Vec::new();
            for k in k0..k1 {
                let st = s.stratum(k).expect("strata are unbounded");
                let next = s.stratum(k + 1).expect("strata are unbounded");
                let (Dim::Finite(n), Dim::Finite(m)) = (st.dim, next.dim) else { unreachable!() };
                let mut link = next.generator.clone();
                for _ in 1..m {
                    link = u.apply_comb(&link)?;
                }
                let mut y = st.generator.clone();
                for l in 0..n {
                    if l == 0 {
                        images.push(y.scale(&mu).add(&link));
                    } else {
                        y = u.apply_comb(&y)?;
                        images.push(y.scale(&lambda));
                    }
                    ys.push(y.clone());
                }
            }
            let stray = |x: &LinComb| -> Result<LinComb> {
                match x.is_zero() {
                    true => Ok(LinComb::zero()),
                    false => Err(Error::Precondition(format!("strata leave their region: {x}"))),
                }
            };
            Ok(solve_images(&idx, &ys, &images, stray)?.into_iter().collect())
        };
        let np = s.prefix.len();
        let prefix = region(0, np, u.core_indices(t.periodic_copies_from))?;
        let group_idx = (t.periodic_copies_from..t.periodic_copies_from + t.group).flat_map(|c| u.period_indices(c)).collect();
        let group0 = region(np, np + t.template.len(), group_idx)?;
        Ok(Arc::new(StratRule { prefix, group0, from: t.periodic_copies_from, group: t.group }))
    }
}

/// `p`-adjacency from a semi-good stratification, with roots `(λ, μ)` in canonical order:
/// `a(x_α) = μx_α + u^{n_{α+1}−1}(x_{α+1})` and `a = λ` on the remaining orbit vectors.
pub fn adjacency_strat(u: &RepAut, s: &Stratification, p: &QuadPoly) -> Result<Adjacency> {
    if !all_infinite(s) {
        let r = is_semi_good(s);
        if !r.passed() {
            let detail = r.first_failure().map(|f| f.detail.clone()).unwrap_or_default();
            return Err(Error::NotSemiGood(detail));
        }
    }
    let spec = StratAdjacencySpec { ambient: u.clone(), strat: s.clone(), p: p.clone() };
    let a = LazyOp::quadratic(RuleSpec::AdjacencyStrat(spec), p.clone())?;
    let v = LazyOp::compose(&[a.clone(), LazyOp::from_aut(u)])?;
    let mut blocks: Vec<Arc<str>> = u.finite_blocks().iter().map(|b| b.id.clone()).collect();
    blocks.extend(u.periodic_blocks().iter().map(|b| b.id.clone()));
    let components = if all_infinite(s) {
        let strata: Vec<&Stratum> = s.prefix.iter().collect();
        match strata.as_slice() {
            [one] if u.finite_blocks().is_empty() && u.periodic_blocks().is_empty() && u.shift_blocks().len() == 1 => {
                vec![Component { generator: one.generator.clone(), blocks: vec![u.shift_blocks()[0].id.clone()] }]
            }
            _ => crate::factorize::transport::shift_components(u)?,
        }
    } else {
        let x0 = s.stratum(0).expect("semi-good stratifications are infinite").generator;
        vec![Component { generator: x0, blocks }]
    };
    Ok(Adjacency { a, v, components })
}
