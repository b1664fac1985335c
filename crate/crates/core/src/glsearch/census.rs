use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::glsearch::enumerate::{annihilated_cells, context, Budget};
use crate::glsearch::gf::SmallGl;
use crate::glsearch::membership::BITMAP_LIMIT;

const MAGIC: &[u8; 8] = b"IVFCENS\0";
pub const CENSUS_VERSION: u32 = 1;
/// Exact layers up to this size are stored in the witness table.
pub const MEMBER_TABLE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetCount {
    pub det: u32,
    /// Products of exactly `k` factors.
    pub exact: u64,
    /// Products of at most `k` factors.
    pub cumulative: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub n: u32,
    pub q: u32,
    pub k: u32,
    /// Monic annihilator as `[t², t, 1]` residues.
    pub poly: [u32; 3],
    pub counts: Vec<DetCount>,
    /// Packed members of the exact layer, ascending.
    pub members: Option<Vec<u64>>,
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(size: u64) -> Bits {
        Bits(vec![0; size.div_ceil(64) as usize])
    }
    fn set(&mut self, k: u64) {
        self.0[(k >> 6) as usize] |= 1 << (k & 63);
    }
    fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &x)| {
            (0..64).filter(move |b| x >> b & 1 == 1).map(move |b| (w as u64) << 6 | b)
        })
    }
    fn union(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }
}

/// Exact product layers `S, S², …, S^k` as packed-key bitmaps.
fn layers(g: &SmallGl, c: [u32; 3], k: u32, budget: &Budget) -> Result<Vec<Bits>> {
    if k == 0 {
        return Err(Error::Malformed("factor count must be positive".into()));
    }
    if g.space_size() > BITMAP_LIMIT {
        return Err(Error::BudgetExceeded(format!("census space {} exceeds bitmap limit", g.space_size())));
    }
    let s = annihilated_cells(g, c, budget)?;
    let mut first = Bits::new(g.space_size());
    for a in s.iter() {
        first.set(g.pack(a));
    }
    let mut out = vec![first];
    for _ in 1..k {
        let prev: Vec<u64> = out.last().expect("nonempty").keys().collect();
        budget.check_work(prev.len() as u64 * s.len() as u64, "census layer")?;
        let next = prev
            .par_iter()
            .fold(
                || Bits::new(g.space_size()),
                |mut acc, &x| {
                    let x = g.unpack(x);
                    for a in s.iter() {
                        acc.set(g.pack(&g.mul(&x, a)));
                    }
                    acc
                },
            )
            .reduce(
                || Bits::new(g.space_size()),
                |mut a, b| {
                    a.union(&b);
                    a
                },
            );
        out.push(next);
    }
    Ok(out)
}

/// Packed keys of all products of exactly `k` matrices annihilated by `p`, ascending.
pub fn product_set(n: usize, k: u32, p: &QuadPoly, budget: &Budget) -> Result<Vec<u64>> {
    let (g, c) = context(n, p, budget)?;
    Ok(layers(&g, c, k, budget)?.pop().expect("k ≥ 1").keys().collect())
}

/// Sizes of the product sets of `k` factors annihilated by `p`, by determinant.
pub fn census(n: usize, k: u32, p: &QuadPoly, budget: &Budget) -> Result<Census> {
    let (g, c) = context(n, p, budget)?;
    let ls = layers(&g, c, k, budget)?;
    let mut exact = vec![0u64; g.q as usize];
    let mut cumulative = vec![0u64; g.q as usize];
    let mut all = Bits::new(g.space_size());
    for l in &ls {
        all.union(l);
    }
    for x in ls.last().expect("k ≥ 1").keys() {
        exact[g.det(&g.unpack(x)) as usize] += 1;
    }
    for x in all.keys() {
        cumulative[g.det(&g.unpack(x)) as usize] += 1;
    }
    let counts = (1..g.q)
        .map(|d| DetCount { det: d, exact: exact[d as usize], cumulative: cumulative[d as usize] })
        .collect();
    let last: Vec<u64> = ls.last().expect("k ≥ 1").keys().collect();
    Ok(Census {
        n: n as u32,
        q: g.q,
        k,
        poly: c,
        counts,
        members: (last.len() <= MEMBER_TABLE_LIMIT).then_some(last),
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Malformed(format!("census file: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Malformed(format!("census file: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

impl Census {
    pub fn total_exact(&self) -> u64 {
        self.counts.iter().map(|c| c.exact).sum()
    }

    pub fn total_cumulative(&self) -> u64 {
        self.counts.iter().map(|c| c.cumulative).sum()
    }

    pub fn file_name(&self) -> String {
        let [a, b, c] = self.poly;
        format!("census_n{}_q{}_k{}_p{a}-{b}-{c}.ivc", self.n, self.q, self.k)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        for x in [CENSUS_VERSION, self.n, self.q, self.k, self.poly[0], self.poly[1], self.poly[2]] {
            out.extend(x.to_le_bytes());
        }
        out.extend((self.counts.len() as u32).to_le_bytes());
        for c in &self.counts {
            out.extend(c.det.to_le_bytes());
            out.extend(c.exact.to_le_bytes());
            out.extend(c.cumulative.to_le_bytes());
        }
        match &self.members {
            Some(m) => {
                out.extend((m.len() as u64).to_le_bytes());
                for x in m {
                    out.extend(x.to_le_bytes());
                }
            }
            None => out.extend(u64::MAX.to_le_bytes()),
        }
        out
    }

    pub fn from_bytes(mut r: impl Read) -> Result<Census> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| Error::Malformed(format!("census file: {e}")))?;
        if &magic != MAGIC {
            return Err(Error::Malformed("not a census file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CENSUS_VERSION {
            return Err(Error::Malformed(format!("census format version {version}")));
        }
        let n = read_u32(&mut r)?;
        let q = read_u32(&mut r)?;
        let k = read_u32(&mut r)?;
        let poly = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        let len = read_u32(&mut r)?;
        let counts = (0..len)
            .map(|_| Ok(DetCount { det: read_u32(&mut r)?, exact: read_u64(&mut r)?, cumulative: read_u64(&mut r)? }))
            .collect::<Result<Vec<_>>>()?;
        let m = read_u64(&mut r)?;
        let members = if m == u64::MAX { None } else { Some((0..m).map(|_| read_u64(&mut r)).collect::<Result<_>>()?) };
        Ok(Census { n, q, k, poly, counts, members })
    }

    /// Writes the census into `dir` under its canonical file name.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut f = std::fs::File::create(&path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Census> {
        let f = std::fs::File::open(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        Census::from_bytes(std::io::BufReader::new(f))
    }
}
