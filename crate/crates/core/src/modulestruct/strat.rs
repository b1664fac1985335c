use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{decompose, Mat};
use crate::modulestruct::span::Echelon;
use crate::opcore::{BasisIndex, BlockKind, CheckReport, LinComb, RepAut, Window};

/// Dimension of a stratum quotient; serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Finite(usize),
    Infinite,
}

impl Dim {
    pub fn exceeds_one(&self) -> bool {
        !matches!(self, Dim::Finite(0 | 1))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Finite(n) => write!(f, "{n}"),
            Dim::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Dim {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Dim::Finite(n) => s.serialize_u64(*n as u64),
            Dim::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Dim, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|n| Dim::Finite(n as usize))
                .ok_or_else(|| serde::de::Error::custom("dimension must be a natural number")),
            serde_json::Value::String(s) if s == "inf" => Ok(Dim::Infinite),
            other => Err(serde::de::Error::custom(format!("bad dimension {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub generator: LinComb,
    pub dim: Dim,
}

/// Strata emitted for every group of `group` periodic copies from `periodic_copies_from` on.
/// Template generators live in the first group; group `j` shifts copies by `j·group`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailRule {
    pub periodic_copies_from: u64,
    #[serde(default = "one")]
    pub group: u64,
    pub template: Vec<Stratum>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratification {
    pub prefix: Vec<Stratum>,
    #[serde(default)]
    pub tail_rule: Option<TailRule>,
}

/// Adds `by` to the copy number of every periodic index.
pub fn shift_copies(x: &LinComb, by: u64) -> LinComb {
    LinComb::from_terms(
        x.iter().map(|(i, c)| (BasisIndex::with_block(&i.block, i.copy.map(|k| k + by), i.slot), c.clone())),
    )
}

impl Stratification {
    pub fn is_infinite(&self) -> bool {
        self.tail_rule.as_ref().is_some_and(|t| !t.template.is_empty())
    }

    /// Stratum `k`, instantiating the tail rule as needed.
    pub fn stratum(&self, k: usize) -> Option<Stratum> {
        if k < self.prefix.len() {
            return Some(self.prefix[k].clone());
        }
        let t = self.tail_rule.as_ref().filter(|t| !t.template.is_empty())?;
        let r = k - self.prefix.len();
        let (j, s) = (r / t.template.len(), r % t.template.len());
        let st = &t.template[s];
        Some(Stratum { generator: shift_copies(&st.generator, j as u64 * t.group), dim: st.dim })
    }

    /// Number of strata lying entirely below periodic copy `copies`.
    pub fn strata_below(&self, copies: u64) -> usize {
        match &self.tail_rule {
            Some(t) if !t.template.is_empty() => {
                let groups = copies.saturating_sub(t.periodic_copies_from) / t.group;
                self.prefix.len() + groups as usize * t.template.len()
            }
            _ => self.prefix.len(),
        }
    }
}

/// Index set without greatest element, and every stratum after the first of dimension > 1.
pub fn is_semi_good(s: &Stratification) -> CheckReport {
    let mut r = CheckReport::new("semi-good stratification");
    r.record(s.is_infinite(), None, || "finite list of strata has a greatest element".into());
    for (k, st) in s.prefix.iter().enumerate().skip(1) {
        r.record(st.dim.exceeds_one(), None, || format!("stratum {k} has dimension {}", st.dim));
    }
    if let Some(t) = &s.tail_rule {
        // template strata recur, so each one is a successor somewhere
        for (k, st) in t.template.iter().enumerate() {
            r.record(st.dim.exceeds_one(), None, || format!("tail template stratum {k} has dimension {}", st.dim));
        }
    }
    r
}

fn cyclic_pieces(u: &RepAut, idx: &[BasisIndex]) -> Result<Vec<Stratum>> {
    let m: Mat = u.restrict_matrix(idx)?;
    Ok(decompose(&m)
        .into_iter()
        .map(|p| Stratum {
            generator: LinComb::from_terms(idx.iter().cloned().zip(p.generator)),
            dim: Dim::Finite(p.degree),
        })
        .collect())
}

fn copies_range(u: &RepAut, from: u64, to: u64) -> Vec<BasisIndex> {
    (from..to).flat_map(|c| u.period_indices(c)).collect()
}

/// A semi-good stratification of a torsion automorphism without dominant eigenvalue.
///
/// The prefix is the cyclic decomposition of the perturbed core plus up to `search_support`
/// further groups of periods; the tail repeats the decomposition of one group of up to
/// `backtrack + 1` periods.
pub fn build_strat_periodic(v: &RepAut, search_support: usize, backtrack: usize) -> Result<Stratification> {
    if !v.shift_blocks().is_empty() {
        return Err(Error::Precondition("stratification builder needs a torsion operator (no shift blocks)".into()));
    }
    if let Some(l) = v.dominant_eigenvalue() {
        return Err(Error::Precondition(format!("operator has dominant eigenvalue {l}")));
    }
    let core = v.core_copies();
    let mut tail = None;
    for g in 1..=backtrack as u64 + 1 {
        let pieces = cyclic_pieces(v, &copies_range(v, core, core + g))?;
        if pieces.iter().all(|p| p.dim.exceeds_one()) {
            tail = Some((g, pieces));
            break;
        }
    }
    let Some((group, template)) = tail else {
        return Err(Error::BuilderStuck(format!(
            "periodic copies do not split into cyclic pieces of dimension ≥ 2 within {} copies",
            backtrack + 1
        )));
    };
    for r in 0..=search_support as u64 {
        let mut idx = v.core_indices(core);
        idx.extend(copies_range(v, core, core + r * group));
        let mut pieces = cyclic_pieces(v, &idx)?;
        let ones = pieces.iter().filter(|p| !p.dim.exceeds_one()).count();
        if ones > 1 {
            continue;
        }
        pieces.sort_by_key(|p| p.dim.exceeds_one());
        let template = template
            .iter()
            .map(|s| Stratum { generator: shift_copies(&s.generator, r * group), dim: s.dim })
            .collect();
        return Ok(Stratification {
            prefix: pieces,
            tail_rule: Some(TailRule { periodic_copies_from: core + r * group, group, template }),
        });
    }
    Err(Error::BuilderStuck(format!(
        "core keeps several one-dimensional cyclic pieces after {search_support} extra period groups"
    )))
}

fn power(u: &RepAut, x: &LinComb, k: i64) -> Result<LinComb> {
    let mut y = x.clone();
    for _ in 0..k.unsigned_abs() {
        y = if k > 0 {
            u.apply_comb(&y)?
        } else {
            let mut z = LinComb::zero();
            for (i, c) in y.iter() {
                z.add_scaled(&u.apply_inverse(i)?, c);
            }
            z
        };
    }
    Ok(y)
}

/// Checks independence of the stratification's orbit family and that it spans the covered window part.
pub fn verify_strat(u: &RepAut, s: &Stratification, window: &Window) -> CheckReport {
    let mut r = CheckReport::new("stratification orbit family");
    let max_copy = window.indices().iter().filter_map(|i| i.copy).max().map_or(0, |c| c + 1);
    let radius = window
        .indices()
        .iter()
        .filter(|i| matches!(u.kind(i), Ok(BlockKind::Shift(_))))
        .map(|i| i.slot.abs())
        .max()
        .unwrap_or(16);
    let count = if s.is_infinite() { s.strata_below(max_copy) } else { s.prefix.len() };
    let mut span = Echelon::new();
    for k in 0..count {
        let st = s.stratum(k).expect("within count");
        let exps: Vec<i64> = match st.dim {
            Dim::Finite(n) => (0..n as i64).collect(),
            Dim::Infinite => (-radius..=radius).collect(),
        };
        for e in exps {
            match power(u, &st.generator, e) {
                Ok(y) => r.record(span.insert(&y), None, || format!("stratum {k}, power {e} is dependent")),
                Err(err) => r.record(false, None, || err.to_string()),
            }
        }
    }
    let covered_copies = match &s.tail_rule {
        Some(t) if s.is_infinite() => {
            let groups = max_copy.saturating_sub(t.periodic_copies_from) / t.group;
            t.periodic_copies_from + groups * t.group
        }
        _ => 0,
    };
    for i in window.indices() {
        let covered = match u.kind(i) {
            Ok(BlockKind::Finite(_)) => true,
            Ok(BlockKind::Periodic(_)) => i.copy.is_some_and(|c| c < covered_copies),
            _ => false,
        };
        if covered {
            let f = u.field();
            r.record(span.contains(&LinComb::unit(i.clone(), f)), Some(i.clone()), || "not spanned".into());
        }
    }
    r
}
