use crate::algebra::{Field, QuadPoly, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Entries of an `n×n` matrix (`n ≤ 4`) over `F_q`, row-major, unused cells zero.
pub type Cells = [u8; 16];

/// Arithmetic context for `M_n(F_q)` with small `n` and `q`.
#[derive(Debug, Clone)]
pub struct SmallGl {
    pub n: usize,
    pub q: u32,
    inv: Vec<u32>,
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

impl SmallGl {
    pub fn new(n: usize, q: u32) -> Result<SmallGl> {
        if !(1..=4).contains(&n) {
            return Err(Error::BudgetExceeded(format!("matrix size {n} outside 1..=4")));
        }
        if !is_prime(q) || q > 251 {
            return Err(Error::UnsupportedField(format!("F{q} (need a prime ≤ 251)")));
        }
        if (q as f64).powi((n * n) as i32) >= 1.8e19 {
            return Err(Error::BudgetExceeded(format!("F{q}^({n}×{n}) does not pack into 64 bits")));
        }
        let mut inv = vec![0u32; q as usize];
        for a in 1..q {
            inv[a as usize] = (1..q).find(|b| a * b % q == 1).expect("prime field");
        }
        Ok(SmallGl { n, q, inv })
    }

    pub fn field(&self) -> Field {
        Field::prime(self.q as u64).expect("prime")
    }

    /// Number of matrices in `M_n(F_q)`.
    pub fn space_size(&self) -> u64 {
        (self.q as u64).pow((self.n * self.n) as u32)
    }

    #[inline]
    pub fn get(&self, a: &Cells, i: usize, j: usize) -> u32 {
        a[i * self.n + j] as u32
    }

    pub fn identity(&self) -> Cells {
        self.scalar(1)
    }

    pub fn scalar(&self, c: u32) -> Cells {
        let mut a = [0u8; 16];
        for i in 0..self.n {
            a[i * self.n + i] = (c % self.q) as u8;
        }
        a
    }

    pub fn mul(&self, a: &Cells, b: &Cells) -> Cells {
        let n = self.n;
        let mut out = [0u8; 16];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0u32;
                for k in 0..n {
                    s += a[i * n + k] as u32 * b[k * n + j] as u32;
                }
                out[i * n + j] = (s % self.q) as u8;
            }
        }
        out
    }

    /// `x·A² + y·A + z·I`.
    pub fn eval_quad(&self, a: &Cells, c: [u32; 3]) -> Cells {
        let a2 = self.mul(a, a);
        let n = self.n;
        let mut out = [0u8; 16];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let mut s = c[0] * a2[k] as u32 + c[1] * a[k] as u32;
                if i == j {
                    s += c[2];
                }
                out[k] = (s % self.q) as u8;
            }
        }
        out
    }

    pub fn is_zero(&self, a: &Cells) -> bool {
        a.iter().all(|&x| x == 0)
    }

    fn eliminate(&self, a: &Cells, rows: usize, cols: usize) -> (usize, u32) {
        let q = self.q;
        let mut m = [[0u32; 4]; 4];
        for i in 0..rows {
            for j in 0..cols {
                m[i][j] = a[i * self.n + j] as u32;
            }
        }
        let mut rank = 0;
        let mut det = 1u32;
        for c in 0..cols {
            let Some(p) = (rank..rows).find(|&r| m[r][c] != 0) else {
                det = 0;
                continue;
            };
            if p != rank {
                m.swap(p, rank);
                det = (q - det) % q;
            }
            let pv = m[rank][c];
            det = det * pv % q;
            let pinv = self.inv[pv as usize];
            for r in rank + 1..rows {
                if m[r][c] != 0 {
                    let f = m[r][c] * pinv % q;
                    for k in c..cols {
                        m[r][k] = (m[r][k] + q * q - f * m[rank][k] % q) % q;
                    }
                }
            }
            rank += 1;
        }
        (rank, if rank == rows.min(cols) && rows == cols { det } else { 0 })
    }

    pub fn det(&self, a: &Cells) -> u32 {
        self.eliminate(a, self.n, self.n).1
    }

    pub fn rank(&self, a: &Cells) -> usize {
        self.eliminate(a, self.n, self.n).0
    }

    pub fn inverse(&self, a: &Cells) -> Option<Cells> {
        let n = self.n;
        let q = self.q;
        let mut m = [[0u32; 8]; 4];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = a[i * n + j] as u32;
            }
            m[i][n + i] = 1;
        }
        for c in 0..n {
            let p = (c..n).find(|&r| m[r][c] != 0)?;
            m.swap(p, c);
            let pinv = self.inv[m[c][c] as usize];
            for k in 0..2 * n {
                m[c][k] = m[c][k] * pinv % q;
            }
            for r in 0..n {
                if r != c && m[r][c] != 0 {
                    let f = m[r][c];
                    for k in 0..2 * n {
                        m[r][k] = (m[r][k] + q * q - f * m[c][k] % q) % q;
                    }
                }
            }
        }
        let mut out = [0u8; 16];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = m[i][n + j] as u8;
            }
        }
        Some(out)
    }

    /// Base-`q` packing of the `n²` entries.
    pub fn pack(&self, a: &Cells) -> u64 {
        let mut k = 0u64;
        for i in (0..self.n * self.n).rev() {
            k = k * self.q as u64 + a[i] as u64;
        }
        k
    }

    pub fn unpack(&self, mut k: u64) -> Cells {
        let mut a = [0u8; 16];
        for x in a.iter_mut().take(self.n * self.n) {
            *x = (k % self.q as u64) as u8;
            k /= self.q as u64;
        }
        a
    }

    pub fn residue(&self, s: &Scalar) -> Result<u32> {
        match s.residue() {
            Some(r) if s.field() == self.field() => Ok(r as u32),
            _ => Err(Error::FieldMismatch(self.field().tag(), s.field().tag())),
        }
    }

    pub fn poly_coeffs(&self, p: &QuadPoly) -> Result<[u32; 3]> {
        Ok([self.residue(p.leading())?, self.residue(p.c1())?, self.residue(p.c0())?])
    }

    pub fn from_mat(&self, m: &Mat) -> Result<Cells> {
        if m.rows() != self.n || m.cols() != self.n {
            return Err(Error::ShapeMismatch(format!("expected {0}×{0}", self.n)));
        }
        let mut a = [0u8; 16];
        for i in 0..self.n {
            for j in 0..self.n {
                a[i * self.n + j] = self.residue(m.get(i, j))? as u8;
            }
        }
        Ok(a)
    }

    pub fn to_mat(&self, a: &Cells) -> Mat {
        let f = self.field();
        let rows = (0..self.n)
            .map(|i| (0..self.n).map(|j| f.from_i64(self.get(a, i, j) as i64)).collect())
            .collect();
        Mat::from_rows(f, rows).expect("square")
    }

    fn poly_eval(&self, c: &[u32], x: u32) -> u32 {
        c.iter().rev().fold(0, |acc, &k| (acc * x + k) % self.q)
    }

    /// Monic characteristic polynomial, constant term first.
    pub fn charpoly(&self, a: &Cells) -> [u32; 5] {
        let n = self.n;
        let q = self.q;
        let mut c = [0u32; 5];
        c[n] = 1;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let k = idx.len();
            let mut sub = [0u8; 16];
            for (r, &i) in idx.iter().enumerate() {
                for (s, &j) in idx.iter().enumerate() {
                    sub[r * self.n + s] = a[i * n + j];
                }
            }
            let d = self.eliminate(&sub, k, k).1;
            let d = if k % 2 == 1 { (q - d) % q } else { d };
            c[n - k] = (c[n - k] + d) % q;
        }
        c
    }

    fn minus_scalar(&self, a: &Cells, c: u32) -> Cells {
        let mut b = *a;
        for i in 0..self.n {
            let k = i * self.n + i;
            b[k] = ((b[k] as u32 + self.q - c) % self.q) as u8;
        }
        b
    }

    /// A complete similarity invariant for `n ≤ 4`.
    pub fn class_key(&self, a: &Cells) -> ClassKey {
        let n = self.n;
        let q = self.q;
        let cp = self.charpoly(a);
        let mut key = ClassKey { charpoly: [0; 5], ranks: [0; 8] };
        for (k, x) in cp.iter().enumerate() {
            key.charpoly[k] = *x as u8;
        }
        let mut slot = 0;
        let mut rest: Vec<u32> = cp[..=n].to_vec();
        let mut found_root = false;
        for c in 0..q {
            let mut mult = 0;
            while rest.len() > 1 && self.poly_eval(&rest, c) == 0 {
                // synthetic division by (t − c)
                let d = rest.len() - 1;
                let mut qq = vec![0u32; d];
                let mut acc = 0u32;
                for k in (0..d).rev() {
                    acc = (rest[k + 1] + acc * c) % q;
                    qq[k] = acc;
                }
                rest = qq;
                mult += 1;
                found_root = true;
            }
            if mult >= 2 {
                let b = self.minus_scalar(a, c);
                let mut pw = b;
                for _ in 1..mult {
                    key.ranks[slot] = self.rank(&pw) as u8;
                    slot += 1;
                    pw = self.mul(&pw, &b);
                }
            }
        }
        if !found_root && n == 4 {
            // repeated irreducible quadratic g with charpoly g²
            for s in 0..q {
                for t in 0..q {
                    let g = [t, s, 1];
                    if (0..q).any(|x| self.poly_eval(&g, x) == 0) {
                        continue;
                    }
                    let sq = [
                        t * t % q,
                        2 * s * t % q,
                        (s * s + 2 * t) % q,
                        2 * s % q,
                        1,
                    ];
                    if sq == cp {
                        let ga = self.eval_quad(a, [1, s, t]);
                        key.ranks[slot] = self.rank(&ga) as u8;
                        return key;
                    }
                }
            }
        }
        key
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub charpoly: [u8; 5],
    pub ranks: [u8; 8],
}
