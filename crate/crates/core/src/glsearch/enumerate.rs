use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::glsearch::gf::{Cells, SmallGl};
use crate::linalg::Mat;

/// Enumeration limits. `INVOFACTOR_BUDGET` overrides them as `dim=4,q=11,work=1e9`
/// or as a bare number for `work`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_dim: usize,
    pub max_q: u32,
    /// Cap on matrices enumerated or multiplied by a single search phase.
    pub max_work: u64,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { max_dim: 3, max_q: 7, max_work: 1 << 33 }
    }
}

impl Budget {
    pub fn from_env() -> Result<Budget> {
        match std::env::var("INVOFACTOR_BUDGET") {
            Ok(s) => Budget::parse(&s),
            Err(_) => Ok(Budget::default()),
        }
    }

    pub fn parse(s: &str) -> Result<Budget> {
        let mut b = Budget::default();
        let num = |v: &str| -> Result<u64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .map(|x| x as u64)
                .ok_or_else(|| Error::Malformed(format!("budget value {v:?}")))
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                None => b.max_work = num(part)?,
                Some(("dim", v)) => b.max_dim = num(v)? as usize,
                Some(("q", v)) => b.max_q = num(v)? as u32,
                Some(("work", v)) => b.max_work = num(v)?,
                Some((k, _)) => return Err(Error::Malformed(format!("unknown budget key {k:?}"))),
            }
        }
        Ok(b)
    }

    pub fn with_dim(mut self, d: usize) -> Budget {
        self.max_dim = d;
        self
    }

    pub fn check_shape(&self, n: usize, q: u32) -> Result<()> {
        if n > self.max_dim {
            return Err(Error::BudgetExceeded(format!("dimension {n} > {}", self.max_dim)));
        }
        if q > self.max_q {
            return Err(Error::BudgetExceeded(format!("field size {q} > {}", self.max_q)));
        }
        Ok(())
    }

    pub fn check_work(&self, work: u64, what: &str) -> Result<()> {
        if work > self.max_work {
            return Err(Error::BudgetExceeded(format!("{what}: {work} > {}", self.max_work)));
        }
        Ok(())
    }
}

/// Context for a quadratic polynomial over a small prime field.
pub fn context(n: usize, p: &QuadPoly, budget: &Budget) -> Result<(SmallGl, [u32; 3])> {
    let q = p.field().characteristic();
    if q == 0 {
        return Err(Error::UnsupportedField("exhaustive search needs a prime field".into()));
    }
    let q = u32::try_from(q).map_err(|_| Error::BudgetExceeded(format!("field size {q}")))?;
    budget.check_shape(n, q)?;
    let g = SmallGl::new(n, q)?;
    let c = g.poly_coeffs(&p.monic())?;
    Ok((g, c))
}

/// Subspaces of `F_q^n` of dimension `k`, each as a list of basis rows in reduced echelon form.
pub fn subspaces(g: &SmallGl, k: usize) -> Vec<Vec<[u8; 4]>> {
    let n = g.n;
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let pivots: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let free: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(r, &pc)| (pc + 1..n).filter(|c| mask >> c & 1 == 0).map(move |c| (r, c)))
            .collect();
        let total = (g.q as u64).pow(free.len() as u32);
        for mut code in 0..total {
            let mut rows = vec![[0u8; 4]; k];
            for (r, &pc) in pivots.iter().enumerate() {
                rows[r][pc] = 1;
            }
            for &(r, c) in &free {
                rows[r][c] = (code % g.q as u64) as u8;
                code /= g.q as u64;
            }
            out.push(rows);
        }
    }
    out
}

fn from_columns(g: &SmallGl, cols: &[[u8; 4]]) -> Cells {
    let mut a = [0u8; 16];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..g.n {
            a[i * g.n + j] = c[i];
        }
    }
    a
}

fn diagonalizable(g: &SmallGl, x: u32, y: u32) -> Vec<Cells> {
    let n = g.n;
    let mut out = Vec::new();
    let spaces: Vec<_> = (0..=n).map(|k| subspaces(g, k)).collect();
    for k in 0..=n {
        for e1 in &spaces[k] {
            for e2 in &spaces[n - k] {
                let cols: Vec<[u8; 4]> = e1.iter().chain(e2).copied().collect();
                let b = from_columns(g, &cols);
                let Some(bi) = g.inverse(&b) else { continue };
                let mut d = [0u8; 16];
                for i in 0..n {
                    d[i * n + i] = if i < k { x } else { y } as u8;
                }
                out.push(g.mul(&g.mul(&b, &d), &bi));
            }
        }
    }
    out
}

fn square_zero_shifted(g: &SmallGl, x: u32) -> Vec<Cells> {
    let n = g.n;
    let q = g.q;
    let mut out = Vec::new();
    for r in 0..=n / 2 {
        for kernel in subspaces(g, n - r) {
            let pivots: Vec<usize> =
                kernel.iter().map(|row| row.iter().position(|&v| v != 0).expect("nonzero row")).collect();
            let comp: Vec<[u8; 4]> = (0..n)
                .filter(|c| !pivots.contains(c))
                .map(|c| {
                    let mut e = [0u8; 4];
                    e[c] = 1;
                    e
                })
                .collect();
            let m = from_columns(g, &comp.iter().chain(&kernel).copied().collect::<Vec<_>>());
            let mi = g.inverse(&m).expect("complement");
            let kdim = n - r;
            let total = (q as u64).pow((kdim * r) as u32);
            for mut code in 0..total {
                let mut images = vec![[0u8; 4]; n];
                for img in images.iter_mut().take(r) {
                    for kv in &kernel {
                        let c = (code % q as u64) as u32;
                        code /= q as u64;
                        for i in 0..n {
                            img[i] = ((img[i] as u32 + c * kv[i] as u32) % q) as u8;
                        }
                    }
                }
                let w = from_columns(g, &images);
                if g.rank(&w) != r {
                    continue;
                }
                let nmat = g.mul(&w, &mi);
                let mut a = g.scalar(x);
                let xn = g.mul(&g.scalar(x), &nmat);
                for i in 0..n * n {
                    a[i] = ((a[i] as u32 + xn[i] as u32) % q) as u8;
                }
                out.push(a);
            }
        }
    }
    out
}

fn brute(g: &SmallGl, c: [u32; 3], budget: &Budget) -> Result<Vec<Cells>> {
    budget.check_work(g.space_size(), "brute-force enumeration")?;
    Ok((0..g.space_size())
        .into_par_iter()
        .filter_map(|k| {
            let a = g.unpack(k);
            g.is_zero(&g.eval_quad(&a, c)).then_some(a)
        })
        .collect())
}

fn roots(g: &SmallGl, c: [u32; 3]) -> Vec<u32> {
    (0..g.q).filter(|&x| (c[0] * x * x + c[1] * x + c[2]).is_multiple_of(g.q)).collect()
}

type CacheKey = (usize, u32, [u32; 3]);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Vec<Cells>>>> {
    static C: OnceLock<Mutex<HashMap<CacheKey, Arc<Vec<Cells>>>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// All matrices annihilated by the monic quadratic `c`, sorted by packed key.
pub fn annihilated_cells(g: &SmallGl, c: [u32; 3], budget: &Budget) -> Result<Arc<Vec<Cells>>> {
    let key = (g.n, g.q, c);
    if let Some(v) = cache().lock().expect("cache").get(&key) {
        return Ok(v.clone());
    }
    let rs = roots(g, c);
    let mut v = match rs.as_slice() {
        [x, y] => diagonalizable(g, *x, *y),
        [x] => square_zero_shifted(g, *x),
        _ => brute(g, c, budget)?,
    };
    v.sort_by_key(|a| g.pack(a));
    v.dedup();
    let v = Arc::new(v);
    cache().lock().expect("cache").insert(key, v.clone());
    Ok(v)
}

/// All `n×n` matrices over the prime field of `p` annihilated by `p`.
pub fn enum_annihilated(n: usize, p: &QuadPoly, budget: &Budget) -> Result<Vec<Mat>> {
    let (g, c) = context(n, p, budget)?;
    Ok(annihilated_cells(&g, c, budget)?.iter().map(|a| g.to_mat(a)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;

    fn poly(s: &str, q: u64) -> QuadPoly {
        QuadPoly::parse(s, Field::prime(q).unwrap()).unwrap()
    }

    #[test]
    fn counts() {
        let b = Budget::default();
        assert_eq!(enum_annihilated(2, &poly("t^2-1", 3), &b).unwrap().len(), 14);
        let one = enum_annihilated(1, &poly("t^2-1", 5), &b).unwrap();
        assert_eq!(one, vec![Mat::from_i64(Field::prime(5).unwrap(), &[&[1]]), Mat::from_i64(Field::prime(5).unwrap(), &[&[4]])]);
        assert_eq!(enum_annihilated(2, &poly("(t-1)^2", 5), &b).unwrap().len(), 25);
    }

    #[test]
    fn structural_matches_brute() {
        let b = Budget::default();
        for (n, q) in [(2, 3), (2, 5), (3, 3), (2, 7)] {
            let g = SmallGl::new(n, q).unwrap();
            for c in [[1, 0, q - 1], [1, q - 2, 1], [1, q - 3, 2], [1, 0, 1], [1, 1, 1]] {
                let mut s = annihilated_cells(&g, c, &b).unwrap().to_vec();
                let mut t = brute(&g, c, &b).unwrap();
                s.sort();
                t.sort();
                assert_eq!(s, t, "n={n} q={q} c={c:?}");
            }
        }
    }

    #[test]
    fn budget_parse() {
        let b = Budget::parse("dim=4, q=11, work=1e6").unwrap();
        assert_eq!(b, Budget { max_dim: 4, max_q: 11, max_work: 1_000_000 });
        assert_eq!(Budget::parse("500").unwrap().max_work, 500);
        assert!(Budget::parse("x=1").is_err());
        let err = enum_annihilated(4, &poly("t^2-1", 3), &Budget::default()).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }
}
