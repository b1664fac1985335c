use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{with_field, Field, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::opcore::index::BasisIndex;
use crate::opcore::lincomb::LinComb;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteBlock {
    pub id: Arc<str>,
    pub matrix: Mat,
}

/// `e_k ↦ multiplier · e_{k+1}` for `k ∈ Z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftBlock {
    pub id: Arc<str>,
    pub multiplier: Scalar,
}

/// Countably many copies of one matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicBlock {
    pub id: Arc<str>,
    pub matrix: Mat,
}

/// One exceptional column: the image of `from` is augmented by `image`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub from: BasisIndex,
    pub image: LinComb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Finite(usize),
    Shift(usize),
    Periodic(usize),
}

#[derive(Serialize, Deserialize)]
struct Repr {
    field: Field,
    #[serde(default)]
    finite_blocks: Vec<FiniteBlock>,
    #[serde(default)]
    shift_blocks: Vec<ShiftBlock>,
    #[serde(default)]
    periodic_blocks: Vec<PeriodicBlock>,
    #[serde(default)]
    coupling: Vec<Action>,
    #[serde(default)]
    perturbation: Vec<Action>,
}

#[derive(Debug)]
struct Derived {
    kinds: HashMap<Arc<str>, BlockKind>,
    finite_inv: Vec<Mat>,
    periodic_inv: Vec<Mat>,
    coupling: HashMap<BasisIndex, LinComb>,
    perturbation: HashMap<BasisIndex, LinComb>,
    z_index: Vec<BasisIndex>,
    z_pos: HashMap<BasisIndex, usize>,
    z_inv: Option<Mat>,
}

/// A representable automorphism: finite blocks ⊕ shift blocks ⊕ periodic families, plus a
/// one-way coupling from finite blocks into shift blocks and a finite-rank perturbation.
#[derive(Debug, Clone)]
pub struct RepAut {
    field: Field,
    finite_blocks: Vec<FiniteBlock>,
    shift_blocks: Vec<ShiftBlock>,
    periodic_blocks: Vec<PeriodicBlock>,
    coupling: Vec<Action>,
    perturbation: Vec<Action>,
    derived: Arc<Derived>,
}

impl PartialEq for RepAut {
    fn eq(&self, o: &RepAut) -> bool {
        self.field == o.field
            && self.finite_blocks == o.finite_blocks
            && self.shift_blocks == o.shift_blocks
            && self.periodic_blocks == o.periodic_blocks
            && self.coupling == o.coupling
            && self.perturbation == o.perturbation
    }
}

/// Incremental constructor for [`RepAut`].
#[derive(Debug, Clone)]
pub struct RepAutBuilder {
    field: Field,
    finite_blocks: Vec<FiniteBlock>,
    shift_blocks: Vec<ShiftBlock>,
    periodic_blocks: Vec<PeriodicBlock>,
    coupling: Vec<Action>,
    perturbation: Vec<Action>,
}

impl RepAutBuilder {
    pub fn finite(mut self, id: &str, matrix: Mat) -> Self {
        self.finite_blocks.push(FiniteBlock { id: Arc::from(id), matrix });
        self
    }

    pub fn shift(mut self, id: &str, multiplier: Scalar) -> Self {
        self.shift_blocks.push(ShiftBlock { id: Arc::from(id), multiplier });
        self
    }

    pub fn periodic(mut self, id: &str, matrix: Mat) -> Self {
        self.periodic_blocks.push(PeriodicBlock { id: Arc::from(id), matrix });
        self
    }

    pub fn coupling(mut self, from: BasisIndex, image: LinComb) -> Self {
        self.coupling.push(Action { from, image });
        self
    }

    pub fn perturb(mut self, from: BasisIndex, image: LinComb) -> Self {
        self.perturbation.push(Action { from, image });
        self
    }

    pub fn build(self) -> Result<RepAut> {
        RepAut::assemble(Repr {
            field: self.field,
            finite_blocks: self.finite_blocks,
            shift_blocks: self.shift_blocks,
            periodic_blocks: self.periodic_blocks,
            coupling: self.coupling,
            perturbation: self.perturbation,
        })
    }
}

impl RepAut {
    pub fn builder(field: Field) -> RepAutBuilder {
        RepAutBuilder {
            field,
            finite_blocks: Vec::new(),
            shift_blocks: Vec::new(),
            periodic_blocks: Vec::new(),
            coupling: Vec::new(),
            perturbation: Vec::new(),
        }
    }

    /// `λ·id` on a countable basis `P0#c[0]`.
    pub fn scalar(lambda: &Scalar) -> Result<RepAut> {
        RepAut::builder(lambda.field()).periodic("P0", Mat::scalar(lambda, 1)).build()
    }

    /// The bilateral shift on `S0`.
    pub fn shift(field: Field) -> RepAut {
        RepAut::builder(field).shift("S0", field.one()).build().expect("shift is valid")
    }

    /// `c·u`, keeping the block layout.
    pub fn scaled(&self, c: &Scalar) -> Result<RepAut> {
        if c.is_zero() {
            return Err(Error::ZeroLambda);
        }
        RepAut::assemble(Repr {
            field: self.field,
            finite_blocks: self
                .finite_blocks
                .iter()
                .map(|b| FiniteBlock { id: b.id.clone(), matrix: b.matrix.scale(c) })
                .collect(),
            shift_blocks: self
                .shift_blocks
                .iter()
                .map(|b| ShiftBlock { id: b.id.clone(), multiplier: &b.multiplier * c })
                .collect(),
            periodic_blocks: self
                .periodic_blocks
                .iter()
                .map(|b| PeriodicBlock { id: b.id.clone(), matrix: b.matrix.scale(c) })
                .collect(),
            coupling: self.coupling.iter().map(|a| Action { from: a.from.clone(), image: a.image.scale(c) }).collect(),
            perturbation: self
                .perturbation
                .iter()
                .map(|a| Action { from: a.from.clone(), image: a.image.scale(c) })
                .collect(),
        })
    }

    fn assemble(r: Repr) -> Result<RepAut> {
        let f = r.field;
        let mut kinds = HashMap::new();
        let mut add_kind = |id: &Arc<str>, k: BlockKind| -> Result<()> {
            if kinds.insert(id.clone(), k).is_some() {
                return Err(Error::Malformed(format!("duplicate block id {id}")));
            }
            Ok(())
        };
        let mut finite_inv = Vec::new();
        for (i, b) in r.finite_blocks.iter().enumerate() {
            add_kind(&b.id, BlockKind::Finite(i))?;
            check_block_matrix(f, &b.id, &b.matrix)?;
            finite_inv.push(b.matrix.inverse().map_err(|_| singular_block(&b.id))?);
        }
        for (i, b) in r.shift_blocks.iter().enumerate() {
            add_kind(&b.id, BlockKind::Shift(i))?;
            if b.multiplier.field() != f {
                return Err(Error::FieldMismatch(f.tag(), b.multiplier.field().tag()));
            }
            if b.multiplier.is_zero() {
                return Err(Error::NotInvertible(format!("shift block {} has multiplier 0", b.id)));
            }
        }
        let mut periodic_inv = Vec::new();
        for (i, b) in r.periodic_blocks.iter().enumerate() {
            add_kind(&b.id, BlockKind::Periodic(i))?;
            check_block_matrix(f, &b.id, &b.matrix)?;
            if b.matrix.rows() == 0 {
                return Err(Error::Malformed(format!("periodic block {} is empty", b.id)));
            }
            periodic_inv.push(b.matrix.inverse().map_err(|_| singular_block(&b.id))?);
        }
        if r.shift_blocks.is_empty() && r.periodic_blocks.is_empty() {
            return Err(Error::Malformed(
                "the space must be infinite-dimensional (add a shift or periodic block)".into(),
            ));
        }
        let mut out = RepAut {
            field: f,
            finite_blocks: r.finite_blocks,
            shift_blocks: r.shift_blocks,
            periodic_blocks: r.periodic_blocks,
            coupling: r.coupling,
            perturbation: r.perturbation,
            derived: Arc::new(Derived {
                kinds,
                finite_inv,
                periodic_inv,
                coupling: HashMap::new(),
                perturbation: HashMap::new(),
                z_index: Vec::new(),
                z_pos: HashMap::new(),
                z_inv: None,
            }),
        };
        let mut coupling: HashMap<BasisIndex, LinComb> = HashMap::new();
        for a in &out.coupling {
            if !matches!(out.kind(&a.from)?, BlockKind::Finite(_)) {
                return Err(Error::Malformed(format!("coupling source {} is not in a finite block", a.from)));
            }
            for (i, x) in a.image.iter() {
                if !matches!(out.kind(i)?, BlockKind::Shift(_)) {
                    return Err(Error::Malformed(format!("coupling target {i} is not in a shift block")));
                }
                check_scalar(f, x)?;
            }
            coupling.entry(a.from.clone()).or_default().add_scaled(&a.image, &f.one());
        }
        let mut perturbation: HashMap<BasisIndex, LinComb> = HashMap::new();
        for a in &out.perturbation {
            out.kind(&a.from)?;
            for (i, x) in a.image.iter() {
                out.kind(i)?;
                check_scalar(f, x)?;
            }
            perturbation.entry(a.from.clone()).or_default().add_scaled(&a.image, &f.one());
        }
        perturbation.retain(|_, v| !v.is_zero());
        {
            let d = Arc::get_mut(&mut out.derived).expect("fresh");
            d.coupling = coupling;
            d.perturbation = perturbation;
        }
        out.prepare_inverse()?;
        Ok(out)
    }

    /// Precomputes `(I + S⁻¹P)` restricted to its support, where `S` is the structured part.
    fn prepare_inverse(&mut self) -> Result<()> {
        if self.derived.perturbation.is_empty() {
            return Ok(());
        }
        let f = self.field;
        let mut sources: Vec<&BasisIndex> = self.derived.perturbation.keys().collect();
        sources.sort();
        let mut k_images = HashMap::new();
        let mut z: BTreeSet<BasisIndex> = BTreeSet::new();
        for s in &sources {
            let img = self.structured_inverse_comb(&self.derived.perturbation[*s])?;
            z.insert((*s).clone());
            z.extend(img.support().cloned());
            k_images.insert((*s).clone(), img);
        }
        let z_index: Vec<BasisIndex> = z.into_iter().collect();
        let z_pos: HashMap<BasisIndex, usize> =
            z_index.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let n = z_index.len();
        let mut m = Mat::identity(f, n);
        for (j, b) in z_index.iter().enumerate() {
            if let Some(img) = k_images.get(b) {
                for (i, x) in img.iter() {
                    let r = z_pos[i];
                    let v = m.get(r, j) + x;
                    m.set(r, j, v);
                }
            }
        }
        let inv = m
            .inverse()
            .map_err(|_| Error::NotInvertible("perturbation makes the operator singular".into()))?;
        let d = Arc::get_mut(&mut self.derived).expect("unshared during construction");
        d.z_index = z_index;
        d.z_pos = z_pos;
        d.z_inv = Some(inv);
        Ok(())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn finite_blocks(&self) -> &[FiniteBlock] {
        &self.finite_blocks
    }

    pub fn shift_blocks(&self) -> &[ShiftBlock] {
        &self.shift_blocks
    }

    pub fn periodic_blocks(&self) -> &[PeriodicBlock] {
        &self.periodic_blocks
    }

    pub fn coupling(&self) -> &[Action] {
        &self.coupling
    }

    pub fn perturbation(&self) -> &[Action] {
        &self.perturbation
    }

    pub fn block_kind(&self, id: &str) -> Option<BlockKind> {
        self.derived.kinds.get(id).copied()
    }

    /// Validates an index against the block structure.
    pub fn kind(&self, i: &BasisIndex) -> Result<BlockKind> {
        let unknown = || Error::UnknownIndex(i.to_string());
        let k = self.derived.kinds.get(&i.block).copied().ok_or_else(unknown)?;
        let ok = match k {
            BlockKind::Finite(b) => {
                i.copy.is_none() && i.slot >= 0 && (i.slot as usize) < self.finite_blocks[b].matrix.rows()
            }
            BlockKind::Shift(_) => i.copy.is_none(),
            BlockKind::Periodic(b) => {
                i.copy.is_some()
                    && i.slot >= 0
                    && (i.slot as usize) < self.periodic_blocks[b].matrix.rows()
            }
        };
        if ok {
            Ok(k)
        } else {
            Err(unknown())
        }
    }

    fn column_comb(m: &Mat, i: &BasisIndex, slot: usize) -> LinComb {
        let mut out = LinComb::zero();
        for r in 0..m.rows() {
            out.add_term(BasisIndex::with_block(&i.block, i.copy, r as i64), m.get(r, slot).clone());
        }
        out
    }

    fn structured(&self, i: &BasisIndex) -> Result<LinComb> {
        Ok(match self.kind(i)? {
            BlockKind::Finite(b) => Self::column_comb(&self.finite_blocks[b].matrix, i, i.slot as usize),
            BlockKind::Shift(b) => LinComb::term(
                BasisIndex::with_block(&i.block, None, i.slot + 1),
                self.shift_blocks[b].multiplier.clone(),
            ),
            BlockKind::Periodic(b) => {
                Self::column_comb(&self.periodic_blocks[b].matrix, i, i.slot as usize)
            }
        })
    }

    fn structured_inverse(&self, i: &BasisIndex) -> Result<LinComb> {
        Ok(match self.kind(i)? {
            BlockKind::Finite(b) => {
                let y = Self::column_comb(&self.derived.finite_inv[b], i, i.slot as usize);
                let mut cy = LinComb::zero();
                for (j, c) in y.iter() {
                    if let Some(img) = self.derived.coupling.get(j) {
                        cy.add_scaled(img, c);
                    }
                }
                let mut out = y;
                for (j, c) in cy.iter() {
                    let BlockKind::Shift(s) = self.kind(j)? else { unreachable!() };
                    let m_inv = self.shift_blocks[s].multiplier.inv()?;
                    out.add_term(BasisIndex::with_block(&j.block, None, j.slot - 1), -(c * &m_inv));
                }
                out
            }
            BlockKind::Shift(b) => LinComb::term(
                BasisIndex::with_block(&i.block, None, i.slot - 1),
                self.shift_blocks[b].multiplier.inv()?,
            ),
            BlockKind::Periodic(b) => Self::column_comb(&self.derived.periodic_inv[b], i, i.slot as usize),
        })
    }

    fn structured_inverse_comb(&self, x: &LinComb) -> Result<LinComb> {
        let mut out = LinComb::zero();
        for (i, c) in x.iter() {
            out.add_scaled(&self.structured_inverse(i)?, c);
        }
        Ok(out)
    }

    /// Image of a basis vector.
    pub fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        let mut out = self.structured(i)?;
        if let Some(c) = self.derived.coupling.get(i) {
            out.add_scaled(c, &self.field.one());
        }
        if let Some(p) = self.derived.perturbation.get(i) {
            out.add_scaled(p, &self.field.one());
        }
        Ok(out)
    }

    /// Image of a basis vector under the inverse.
    pub fn apply_inverse(&self, i: &BasisIndex) -> Result<LinComb> {
        let x = self.structured_inverse(i)?;
        let Some(zinv) = &self.derived.z_inv else {
            return Ok(x);
        };
        let d = &self.derived;
        let (inside, mut out) = x.partition(|b| d.z_pos.contains_key(b));
        if inside.is_zero() {
            return Ok(out);
        }
        let mut z = vec![self.field.zero(); d.z_index.len()];
        for (b, c) in inside.iter() {
            z[d.z_pos[b]] = c.clone();
        }
        for (r, c) in zinv.mul_vec(&z).into_iter().enumerate() {
            out.add_term(d.z_index[r].clone(), c);
        }
        Ok(out)
    }

    pub fn apply_comb(&self, x: &LinComb) -> Result<LinComb> {
        let mut out = LinComb::zero();
        for (i, c) in x.iter() {
            out.add_scaled(&self.apply(i)?, c);
        }
        Ok(out)
    }

    /// The unique `λ` with `u − λ·id` of finite rank, if any.
    pub fn dominant_eigenvalue(&self) -> Option<Scalar> {
        if !self.shift_blocks.is_empty() {
            return None;
        }
        let mut lambda: Option<Scalar> = None;
        for b in &self.periodic_blocks {
            let m = &b.matrix;
            let c = m.get(0, 0).clone();
            if *m != Mat::scalar(&c, m.rows()) {
                return None;
            }
            match &lambda {
                None => lambda = Some(c),
                Some(l) if *l == c => {}
                Some(_) => return None,
            }
        }
        lambda
    }

    /// Number of leading periodic copies touched by the perturbation.
    pub fn core_copies(&self) -> u64 {
        let mut top = None;
        for a in &self.perturbation {
            for i in std::iter::once(&a.from).chain(a.image.support()) {
                if let Some(c) = i.copy {
                    top = Some(top.map_or(c, |t: u64| t.max(c)));
                }
            }
        }
        top.map_or(0, |t| t + 1)
    }

    /// All finite-block indices in block order.
    pub fn finite_indices(&self) -> Vec<BasisIndex> {
        let mut out = Vec::new();
        for b in &self.finite_blocks {
            for s in 0..b.matrix.rows() {
                out.push(BasisIndex::with_block(&b.id, None, s as i64));
            }
        }
        out
    }

    /// Indices of periodic copy `c` across all periodic blocks.
    pub fn period_indices(&self, c: u64) -> Vec<BasisIndex> {
        let mut out = Vec::new();
        for b in &self.periodic_blocks {
            for s in 0..b.matrix.rows() {
                out.push(BasisIndex::with_block(&b.id, Some(c), s as i64));
            }
        }
        out
    }

    /// Dimension of one period (one copy of every periodic block).
    pub fn period_dim(&self) -> usize {
        self.periodic_blocks.iter().map(|b| b.matrix.rows()).sum()
    }

    /// Finite blocks plus the first `copies` periods.
    pub fn core_indices(&self, copies: u64) -> Vec<BasisIndex> {
        let mut out = self.finite_indices();
        for c in 0..copies {
            out.extend(self.period_indices(c));
        }
        out
    }

    /// Matrix of `u` on the span of `idx`, which must be invariant.
    pub fn restrict_matrix(&self, idx: &[BasisIndex]) -> Result<Mat> {
        let pos: HashMap<&BasisIndex, usize> = idx.iter().enumerate().map(|(k, b)| (b, k)).collect();
        let mut m = Mat::zeros(self.field, idx.len(), idx.len());
        for (j, b) in idx.iter().enumerate() {
            for (i, x) in self.apply(b)?.iter() {
                let r = *pos
                    .get(i)
                    .ok_or_else(|| Error::Precondition(format!("{b} maps outside the index set via {i}")))?;
                m.set(r, j, x.clone());
            }
        }
        Ok(m)
    }

    /// Indices touched by coupling or perturbation, sources and targets.
    pub fn exceptional_support(&self) -> BTreeSet<BasisIndex> {
        let mut out = BTreeSet::new();
        for a in self.coupling.iter().chain(&self.perturbation) {
            out.insert(a.from.clone());
            out.extend(a.image.support().cloned());
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<RepAut> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn check_block_matrix(f: Field, id: &str, m: &Mat) -> Result<()> {
    if m.field() != f {
        return Err(Error::FieldMismatch(f.tag(), m.field().tag()));
    }
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("block {id} is not square")));
    }
    Ok(())
}

fn check_scalar(f: Field, x: &Scalar) -> Result<()> {
    if x.field() != f {
        return Err(Error::FieldMismatch(f.tag(), x.field().tag()));
    }
    Ok(())
}

fn singular_block(id: &str) -> Error {
    Error::NotInvertible(format!("block {id} is singular"))
}

impl Serialize for RepAut {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            field: self.field,
            finite_blocks: self.finite_blocks.clone(),
            shift_blocks: self.shift_blocks.clone(),
            periodic_blocks: self.periodic_blocks.clone(),
            coupling: self.coupling.clone(),
            perturbation: self.perturbation.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RepAut {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<RepAut, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        let field: Field = v
            .get("field")
            .cloned()
            .ok_or_else(|| D::Error::custom("missing field tag"))
            .and_then(|f| serde_json::from_value(f).map_err(D::Error::custom))?;
        let repr: Repr = with_field(field, || serde_json::from_value(v)).map_err(D::Error::custom)?;
        RepAut::assemble(repr).map_err(D::Error::custom)
    }
}
