use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::glsearch::enumerate::{annihilated_cells, context, Budget};
use crate::glsearch::gf::{Cells, ClassKey, SmallGl};
use crate::linalg::Mat;

/// Largest matrix space stored as a flat bitmap.
pub const BITMAP_LIMIT: u64 = 1 << 31;

/// Membership index for a two-factor product set `S·S'`.
pub enum PairIndex {
    /// One bit per packed matrix.
    Bitmap(Vec<u64>),
    /// Similarity classes meeting the product set, which is closed under conjugation.
    Classes(HashSet<ClassKey>),
}

impl PairIndex {
    fn contains(&self, g: &SmallGl, a: &Cells) -> bool {
        match self {
            PairIndex::Bitmap(bits) => {
                let k = g.pack(a);
                bits[(k >> 6) as usize] >> (k & 63) & 1 == 1
            }
            PairIndex::Classes(keys) => keys.contains(&g.class_key(a)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PairIndex::Bitmap(bits) => bits.iter().map(|w| w.count_ones() as usize).sum(),
            PairIndex::Classes(keys) => keys.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Indexed {
    index: PairIndex,
    dets: Vec<bool>,
}

type PairKey = (usize, u32, [u32; 3], [u32; 3]);

fn pair_cache() -> &'static Mutex<HashMap<PairKey, Arc<Indexed>>> {
    static C: OnceLock<Mutex<HashMap<PairKey, Arc<Indexed>>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn class_reps(g: &SmallGl, s: &[Cells]) -> Vec<Cells> {
    let mut seen = HashMap::new();
    for a in s {
        seen.entry(g.class_key(a)).or_insert(*a);
    }
    let mut v: Vec<Cells> = seen.into_values().collect();
    v.sort_by_key(|a| g.pack(a));
    v
}

fn build_pair(g: &SmallGl, c1: [u32; 3], c2: [u32; 3], budget: &Budget) -> Result<Arc<Indexed>> {
    let key = (g.n, g.q, c1, c2);
    if let Some(v) = pair_cache().lock().expect("cache").get(&key) {
        return Ok(v.clone());
    }
    let s1 = annihilated_cells(g, c1, budget)?;
    let s2 = annihilated_cells(g, c2, budget)?;
    let mut dets = vec![false; g.q as usize];
    let d1: HashSet<u32> = s1.iter().map(|a| g.det(a)).collect();
    let d2: HashSet<u32> = s2.iter().map(|a| g.det(a)).collect();
    for x in &d1 {
        for y in &d2 {
            dets[(x * y % g.q) as usize] = true;
        }
    }
    let index = if g.space_size() <= BITMAP_LIMIT {
        budget.check_work(s1.len() as u64 * s2.len() as u64, "product-set index")?;
        let bits: Vec<AtomicU64> = (0..g.space_size().div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
        s1.par_iter().for_each(|a| {
            for b in s2.iter() {
                let k = g.pack(&g.mul(a, b));
                bits[(k >> 6) as usize].fetch_or(1 << (k & 63), Ordering::Relaxed);
            }
        });
        PairIndex::Bitmap(bits.into_iter().map(AtomicU64::into_inner).collect())
    } else {
        let reps = class_reps(g, &s1);
        budget.check_work(reps.len() as u64 * s2.len() as u64, "product-class index")?;
        let keys = reps
            .par_iter()
            .flat_map_iter(|a| s2.iter().map(move |b| g.class_key(&g.mul(a, b))))
            .fold(HashSet::new, |mut h, k| {
                h.insert(k);
                h
            })
            .reduce(HashSet::new, |mut a, b| {
                a.extend(b);
                a
            });
        PairIndex::Classes(keys)
    };
    let v = Arc::new(Indexed { index, dets });
    pair_cache().lock().expect("cache").insert(key, v.clone());
    Ok(v)
}

/// Number of elements (bitmap) or similarity classes (class index) in `S·S'`.
pub fn pair_index_size(n: usize, p1: &QuadPoly, p2: &QuadPoly, budget: &Budget) -> Result<usize> {
    let (g, c1) = context(n, p1, budget)?;
    let c2 = g.poly_coeffs(&p2.monic())?;
    Ok(build_pair(&g, c1, c2, budget)?.index.len())
}

fn split_pair(g: &SmallGl, y: &Cells, c1: [u32; 3], c2: [u32; 3], budget: &Budget) -> Result<Option<[Cells; 2]>> {
    let s1 = annihilated_cells(g, c1, budget)?;
    Ok(s1.par_iter().find_map_first(|a| {
        let b = g.mul(&g.inverse(a)?, y);
        g.is_zero(&g.eval_quad(&b, c2)).then_some([*a, b])
    }))
}

/// Factorization of `t` over small prime fields; cells interface.
pub fn membership_cells(g: &SmallGl, t: &Cells, cs: &[[u32; 3]], budget: &Budget) -> Result<Option<Vec<Cells>>> {
    if g.det(t) == 0 {
        return Ok(None);
    }
    match cs {
        [] => Err(Error::Malformed("empty polynomial list".into())),
        [c] => Ok(g.is_zero(&g.eval_quad(t, *c)).then(|| vec![*t])),
        [c1, c2] => Ok(split_pair(g, t, *c1, *c2, budget)?.map(|w| w.to_vec())),
        [c1, c2, c3] => {
            let idx = build_pair(g, *c2, *c3, budget)?;
            let s1 = annihilated_cells(g, *c1, budget)?;
            let dt = g.det(t);
            let hit = s1.par_iter().find_map_first(|a| {
                let ai = g.inverse(a)?;
                let y = g.mul(&ai, t);
                let d = dt * g.det(&ai) % g.q;
                (idx.dets[d as usize] && idx.index.contains(g, &y)).then_some((*a, y))
            });
            let Some((a, y)) = hit else { return Ok(None) };
            let [b, c] = split_pair(g, &y, *c2, *c3, budget)?.ok_or_else(|| {
                Error::BudgetExceeded("product index and witness recovery disagree".into())
            })?;
            Ok(Some(vec![a, b, c]))
        }
        [c1, c2, c3, c4] => {
            let idx = build_pair(g, *c3, *c4, budget)?;
            let s1 = annihilated_cells(g, *c1, budget)?;
            let s2 = annihilated_cells(g, *c2, budget)?;
            budget.check_work(s1.len() as u64 * s2.len() as u64, "four-factor scan")?;
            let hit = s1.par_iter().find_map_first(|a| {
                let x = g.mul(&g.inverse(a)?, t);
                s2.iter().find_map(|b| {
                    let y = g.mul(&g.inverse(b)?, &x);
                    idx.index.contains(g, &y).then_some((*a, *b, y))
                })
            });
            let Some((a, b, y)) = hit else { return Ok(None) };
            let [c, d] = split_pair(g, &y, *c3, *c4, budget)?.ok_or_else(|| {
                Error::BudgetExceeded("product index and witness recovery disagree".into())
            })?;
            Ok(Some(vec![a, b, c, d]))
        }
        _ => Err(Error::Malformed(format!("at most four factors, got {}", cs.len()))),
    }
}

/// Decides whether `t = a_1⋯a_k` with `p_i(a_i) = 0`, returning one witness.
pub fn product_membership(t: &Mat, polys: &[QuadPoly], budget: &Budget) -> Result<Option<Vec<Mat>>> {
    if !t.is_square() {
        return Err(Error::ShapeMismatch("target must be square".into()));
    }
    let first = polys.first().ok_or_else(|| Error::Malformed("empty polynomial list".into()))?;
    let (g, _) = context(t.rows(), first, budget)?;
    let cs = polys.iter().map(|p| g.poly_coeffs(&p.monic())).collect::<Result<Vec<_>>>()?;
    let tc = g.from_mat(t)?;
    Ok(membership_cells(&g, &tc, &cs, budget)?.map(|w| w.iter().map(|a| g.to_mat(a)).collect()))
}
