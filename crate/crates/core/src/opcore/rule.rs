use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::opcore::index::{unzigzag, zigzag, BasisIndex};
use crate::opcore::lincomb::LinComb;
use crate::opcore::repaut::{Action, RepAut};

/// A pure, locally finite rule: basis index ↦ finite linear combination.
pub trait Rule: Send + Sync {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb>;
}

pub fn apply_comb(rule: &dyn Rule, x: &LinComb) -> Result<LinComb> {
    let mut out = LinComb::zero();
    for (i, c) in x.iter() {
        out.add_scaled(&rule.apply(i)?, c);
    }
    Ok(out)
}

/// How a block's basis is laid out as one infinite stream `0, 1, 2, …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum StreamShape {
    /// Periodic copies of dimension `period`: position `copy·period + slot`.
    Periodic { period: usize },
    /// Bilateral slots in zigzag order `0, −1, 1, −2, …`.
    Shift,
}

impl StreamShape {
    pub fn position(&self, i: &BasisIndex) -> Option<u64> {
        match (*self, i.copy) {
            (StreamShape::Periodic { period }, Some(c)) if i.slot >= 0 && (i.slot as usize) < period => {
                Some(c * period as u64 + i.slot as u64)
            }
            (StreamShape::Shift, None) => Some(zigzag(i.slot)),
            _ => None,
        }
    }

    pub fn index(&self, block: &Arc<str>, j: u64) -> BasisIndex {
        match *self {
            StreamShape::Periodic { period } => {
                let p = period as u64;
                BasisIndex::with_block(block, Some(j / p), (j % p) as i64)
            }
            StreamShape::Shift => BasisIndex::with_block(block, None, unzigzag(j)),
        }
    }
}

/// An explicit finite cell: the matrix acts on the span of `indices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub indices: Vec<BasisIndex>,
    pub matrix: Mat,
}

/// A block stream cut into consecutive chunks from `offset` on; each chunk gets `matrix`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCells {
    pub block: Arc<str>,
    pub shape: StreamShape,
    pub offset: u64,
    pub matrix: Mat,
}

/// Block-diagonal rule: explicit cells, periodic chunk tilings, and an optional scalar tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockwiseSpec {
    #[serde(default)]
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub streams: Vec<StreamCells>,
    #[serde(default)]
    pub tail: Option<Scalar>,
}

/// Inner stream positions `j` correspond to outer positions `offset + j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMap {
    pub inner: Arc<str>,
    pub inner_shape: StreamShape,
    pub outer: Arc<str>,
    pub outer_shape: StreamShape,
    pub offset: u64,
}

/// A bijection between an inner index set and an outer one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMap {
    /// `(inner, outer)` pairs.
    #[serde(default)]
    pub table: Vec<(BasisIndex, BasisIndex)>,
    #[serde(default)]
    pub streams: Vec<StreamMap>,
}

#[derive(Debug)]
struct CompiledMap {
    to_outer: HashMap<BasisIndex, BasisIndex>,
    to_inner: HashMap<BasisIndex, BasisIndex>,
    streams: Vec<StreamMap>,
}

impl IndexMap {
    fn compile(&self) -> CompiledMap {
        CompiledMap {
            to_outer: self.table.iter().cloned().collect(),
            to_inner: self.table.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            streams: self.streams.clone(),
        }
    }
}

impl CompiledMap {
    fn outer(&self, i: &BasisIndex) -> Result<BasisIndex> {
        if let Some(o) = self.to_outer.get(i) {
            return Ok(o.clone());
        }
        for s in &self.streams {
            if s.inner == i.block {
                if let Some(j) = s.inner_shape.position(i) {
                    return Ok(s.outer_shape.index(&s.outer, s.offset + j));
                }
            }
        }
        Err(Error::UnknownIndex(format!("{i} (inner side of relabel)")))
    }

    fn inner(&self, i: &BasisIndex) -> Result<BasisIndex> {
        if let Some(o) = self.to_inner.get(i) {
            return Ok(o.clone());
        }
        for s in &self.streams {
            if s.outer == i.block {
                if let Some(j) = s.outer_shape.position(i) {
                    if j >= s.offset {
                        return Ok(s.inner_shape.index(&s.inner, j - s.offset));
                    }
                }
            }
        }
        Err(Error::UnknownIndex(format!("{i} (outer side of relabel)")))
    }

    fn comb_to_outer(&self, x: &LinComb) -> Result<LinComb> {
        let mut out = LinComb::zero();
        for (i, c) in x.iter() {
            out.add_term(self.outer(i)?, c.clone());
        }
        Ok(out)
    }
}

/// Serializable description of a rule; compiled with [`RuleSpec::compile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    /// `e_i ↦ value·e_i`.
    Scalar { value: Scalar },
    /// Explicit images on `entries`, `tail·e_i` elsewhere.
    Table { entries: Vec<Action>, tail: Scalar },
    Aut { op: RepAut },
    AutInverse { op: RepAut },
    /// Product `ops[0] ∘ ops[1] ∘ …`, applied right to left.
    Compose { ops: Vec<RuleSpec> },
    /// `(tr·id − op)/N` for `op` annihilated by `annihilator`.
    QuadInverse { op: Box<RuleSpec>, annihilator: QuadPoly },
    Blockwise(BlockwiseSpec),
    /// `op` acting on an inner index set, transported through `map`.
    Relabel { op: Box<RuleSpec>, map: IndexMap },
    ShiftPair(crate::factorize::shift_pair::ShiftPairSpec),
    AdjacencyStrat(crate::factorize::adjacency::StratAdjacencySpec),
    AdjacencyFree(crate::factorize::adjacency::FreeAdjacencySpec),
    Transported(crate::factorize::transport::TransportSpec),
}

impl RuleSpec {
    pub fn identity(field: crate::algebra::Field) -> RuleSpec {
        RuleSpec::Scalar { value: field.one() }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RuleSpec::Scalar { .. } => "scalar",
            RuleSpec::Table { .. } => "table",
            RuleSpec::Aut { .. } => "aut",
            RuleSpec::AutInverse { .. } => "aut_inverse",
            RuleSpec::Compose { .. } => "compose",
            RuleSpec::QuadInverse { .. } => "quad_inverse",
            RuleSpec::Blockwise(_) => "blockwise",
            RuleSpec::Relabel { .. } => "relabel",
            RuleSpec::ShiftPair(_) => "shift_pair",
            RuleSpec::AdjacencyStrat(_) => "adjacency_strat",
            RuleSpec::AdjacencyFree(_) => "adjacency_free",
            RuleSpec::Transported(_) => "transported",
        }
    }

    pub fn compile(&self) -> Result<Arc<dyn Rule>> {
        Ok(match self {
            RuleSpec::Scalar { value } => Arc::new(ScalarRule(value.clone())),
            RuleSpec::Table { entries, tail } => {
                let mut map: HashMap<BasisIndex, LinComb> = HashMap::new();
                for a in entries {
                    if map.insert(a.from.clone(), a.image.clone()).is_some() {
                        return Err(Error::Malformed(format!("table lists {} twice", a.from)));
                    }
                }
                Arc::new(TableRule { map, tail: tail.clone() })
            }
            RuleSpec::Aut { op } => Arc::new(AutRule(op.clone())),
            RuleSpec::AutInverse { op } => Arc::new(AutInverseRule(op.clone())),
            RuleSpec::Compose { ops } => {
                if ops.is_empty() {
                    return Err(Error::Malformed("empty composition".into()));
                }
                Arc::new(ComposeRule(ops.iter().map(|o| o.compile()).collect::<Result<_>>()?))
            }
            RuleSpec::QuadInverse { op, annihilator } => {
                if !annihilator.is_non_derogatory() {
                    return Err(Error::DerogatoryInput);
                }
                Arc::new(QuadInverseRule {
                    op: op.compile()?,
                    trace: annihilator.trace(),
                    norm_inv: annihilator.norm().inv()?,
                })
            }
            RuleSpec::Blockwise(b) => Arc::new(BlockwiseRule::new(b)?),
            RuleSpec::Relabel { op, map } => Arc::new(RelabelRule { op: op.compile()?, map: map.compile() }),
            RuleSpec::ShiftPair(s) => s.compile()?,
            RuleSpec::AdjacencyStrat(s) => s.compile()?,
            RuleSpec::AdjacencyFree(s) => s.compile()?,
            RuleSpec::Transported(s) => s.compile()?,
        })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Scalar { value } => write!(f, "{value}·id"),
            RuleSpec::Compose { ops } => {
                let parts: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
                write!(f, "({})", parts.join(" ∘ "))
            }
            RuleSpec::QuadInverse { op, .. } => write!(f, "{op}⁻¹"),
            RuleSpec::Relabel { op, .. } => write!(f, "relabel[{op}]"),
            other => f.write_str(other.kind_name()),
        }
    }
}

struct ScalarRule(Scalar);

impl Rule for ScalarRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        Ok(LinComb::term(i.clone(), self.0.clone()))
    }
}

struct TableRule {
    map: HashMap<BasisIndex, LinComb>,
    tail: Scalar,
}

impl Rule for TableRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        Ok(match self.map.get(i) {
            Some(x) => x.clone(),
            None => LinComb::term(i.clone(), self.tail.clone()),
        })
    }
}

struct AutRule(RepAut);

impl Rule for AutRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        self.0.apply(i)
    }
}

struct AutInverseRule(RepAut);

impl Rule for AutInverseRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        self.0.apply_inverse(i)
    }
}

struct ComposeRule(Vec<Arc<dyn Rule>>);

impl Rule for ComposeRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        let mut it = self.0.iter().rev();
        let mut x = it.next().expect("nonempty").apply(i)?;
        for r in it {
            x = apply_comb(r.as_ref(), &x)?;
        }
        Ok(x)
    }
}

struct QuadInverseRule {
    op: Arc<dyn Rule>,
    trace: Scalar,
    norm_inv: Scalar,
}

impl Rule for QuadInverseRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        let mut x = LinComb::term(i.clone(), self.trace.clone());
        x.add_scaled(&self.op.apply(i)?, &-&self.norm_inv.field().one());
        Ok(x.scale(&self.norm_inv))
    }
}

struct BlockwiseRule {
    cells: Vec<Cell>,
    cell_pos: HashMap<BasisIndex, (usize, usize)>,
    streams: HashMap<Arc<str>, StreamCells>,
    tail: Option<Scalar>,
}

impl BlockwiseRule {
    fn new(spec: &BlockwiseSpec) -> Result<BlockwiseRule> {
        let mut cell_pos = HashMap::new();
        for (c, cell) in spec.cells.iter().enumerate() {
            let n = cell.indices.len();
            if cell.matrix.rows() != n || cell.matrix.cols() != n {
                return Err(Error::ShapeMismatch(format!("cell {c} has {n} indices")));
            }
            for (k, i) in cell.indices.iter().enumerate() {
                if cell_pos.insert(i.clone(), (c, k)).is_some() {
                    return Err(Error::Malformed(format!("{i} lies in two cells")));
                }
            }
        }
        let mut streams = HashMap::new();
        for s in &spec.streams {
            if !s.matrix.is_square() || s.matrix.rows() == 0 {
                return Err(Error::ShapeMismatch(format!("stream chunk on {} is not square", s.block)));
            }
            if streams.insert(s.block.clone(), s.clone()).is_some() {
                return Err(Error::Malformed(format!("two streams on block {}", s.block)));
            }
        }
        Ok(BlockwiseRule { cells: spec.cells.clone(), cell_pos, streams, tail: spec.tail.clone() })
    }
}

impl Rule for BlockwiseRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        if let Some(&(c, k)) = self.cell_pos.get(i) {
            let cell = &self.cells[c];
            let mut out = LinComb::zero();
            for (r, idx) in cell.indices.iter().enumerate() {
                out.add_term(idx.clone(), cell.matrix.get(r, k).clone());
            }
            return Ok(out);
        }
        if let Some(s) = self.streams.get(&i.block) {
            if let Some(j) = s.shape.position(i).filter(|&j| j >= s.offset) {
                let m = s.matrix.rows() as u64;
                let base = s.offset + (j - s.offset) / m * m;
                let k = (j - base) as usize;
                let mut out = LinComb::zero();
                for r in 0..s.matrix.rows() {
                    out.add_term(s.shape.index(&s.block, base + r as u64), s.matrix.get(r, k).clone());
                }
                return Ok(out);
            }
        }
        match &self.tail {
            Some(t) => Ok(LinComb::term(i.clone(), t.clone())),
            None => Err(Error::UnknownIndex(i.to_string())),
        }
    }
}

struct RelabelRule {
    op: Arc<dyn Rule>,
    map: CompiledMap,
}

impl Rule for RelabelRule {
    fn apply(&self, i: &BasisIndex) -> Result<LinComb> {
        let inner = self.map.inner(i)?;
        self.map.comb_to_outer(&self.op.apply(&inner)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;

    fn f5() -> Field {
        Field::prime(5).unwrap()
    }

    #[test]
    fn stream_positions_round_trip() {
        let b: Arc<str> = Arc::from("P0");
        let s = StreamShape::Periodic { period: 3 };
        for j in 0..20 {
            assert_eq!(s.position(&s.index(&b, j)), Some(j));
        }
        let z = StreamShape::Shift;
        for j in 0..20 {
            assert_eq!(z.position(&z.index(&b, j)), Some(j));
        }
        assert_eq!(s.position(&BasisIndex::new("P0", 0)), None);
    }

    #[test]
    fn blockwise_cells_and_streams() {
        let f = f5();
        let spec = RuleSpec::Blockwise(BlockwiseSpec {
            cells: vec![Cell {
                indices: vec![BasisIndex::new("F0", 0)],
                matrix: Mat::from_i64(f, &[&[3]]),
            }],
            streams: vec![StreamCells {
                block: Arc::from("P0"),
                shape: StreamShape::Periodic { period: 1 },
                offset: 1,
                matrix: Mat::from_i64(f, &[&[0, 1], &[1, 0]]),
            }],
            tail: None,
        });
        let r = spec.compile().unwrap();
        let p = |c| BasisIndex::periodic("P0", c, 0);
        assert_eq!(r.apply(&BasisIndex::new("F0", 0)).unwrap(), LinComb::term(BasisIndex::new("F0", 0), f.from_i64(3)));
        assert_eq!(r.apply(&p(1)).unwrap(), LinComb::unit(p(2), f));
        assert_eq!(r.apply(&p(4)).unwrap(), LinComb::unit(p(3), f));
        assert!(r.apply(&p(0)).is_err());
    }

    #[test]
    fn compose_is_right_to_left() {
        let f = f5();
        let shift = RuleSpec::Aut { op: RepAut::shift(f) };
        let scale = RuleSpec::Table {
            entries: vec![Action { from: BasisIndex::new("S0", 1), image: LinComb::term(BasisIndex::new("S0", 1), f.from_i64(2)) }],
            tail: f.one(),
        };
        let r = RuleSpec::Compose { ops: vec![scale.clone(), shift.clone()] }.compile().unwrap();
        assert_eq!(r.apply(&BasisIndex::new("S0", 0)).unwrap(), LinComb::term(BasisIndex::new("S0", 1), f.from_i64(2)));
        let r = RuleSpec::Compose { ops: vec![shift, scale] }.compile().unwrap();
        assert_eq!(r.apply(&BasisIndex::new("S0", 0)).unwrap(), LinComb::unit(BasisIndex::new("S0", 1), f));
    }

    #[test]
    fn relabel_moves_streams() {
        let f = f5();
        let inner = RuleSpec::Aut { op: RepAut::scalar(&f.from_i64(2)).unwrap() };
        let map = IndexMap {
            table: vec![(BasisIndex::new("K", 0), BasisIndex::periodic("Q", 0, 0))],
            streams: vec![StreamMap {
                inner: Arc::from("P0"),
                inner_shape: StreamShape::Periodic { period: 1 },
                outer: Arc::from("Q"),
                outer_shape: StreamShape::Periodic { period: 1 },
                offset: 1,
            }],
        };
        let r = RuleSpec::Relabel { op: Box::new(inner), map }.compile().unwrap();
        let q = BasisIndex::periodic("Q", 5, 0);
        assert_eq!(r.apply(&q).unwrap(), LinComb::term(q, f.from_i64(2)));
        assert!(r.apply(&BasisIndex::periodic("Q", 0, 0)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = f5();
        let spec = RuleSpec::QuadInverse {
            op: Box::new(RuleSpec::Aut { op: RepAut::shift(f) }),
            annihilator: QuadPoly::from_i64(f, 1, 0, -1).unwrap(),
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: RuleSpec = crate::algebra::with_field(f, || serde_json::from_str(&s)).unwrap();
        assert_eq!(back, spec);
    }
}
