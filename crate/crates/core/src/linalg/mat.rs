use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{Field, QuadPoly, Scalar};
use crate::error::{Error, Result};

/// Dense matrix over a single declared field, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Column vector helper type.
pub type Vector = Vec<Scalar>;

impl Mat {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Mat {
        Mat { field, rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Mat {
        Mat::scalar(&field.one(), n)
    }

    pub fn scalar(s: &Scalar, n: usize) -> Mat {
        let mut m = Mat::zeros(s.field(), n, n);
        for i in 0..n {
            m.set(i, i, s.clone());
        }
        m
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<Scalar>>) -> Result<Mat> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            for x in row {
                if x.field() != field {
                    return Err(Error::FieldMismatch(field.tag(), x.field().tag()));
                }
                data.push(x);
            }
        }
        Ok(Mat { field, rows: r, cols: c, data })
    }

    /// Convenience constructor from integer rows.
    pub fn from_i64(field: Field, rows: &[&[i64]]) -> Mat {
        let rows = rows.iter().map(|r| r.iter().map(|&x| field.from_i64(x)).collect()).collect();
        Mat::from_rows(field, rows).expect("rectangular integer rows")
    }

    pub fn from_columns(field: Field, rows: usize, cols: &[Vector]) -> Mat {
        let mut m = Mat::zeros(field, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn diag(field: Field, entries: &[Scalar]) -> Mat {
        let mut m = Mat::zeros(field, entries.len(), entries.len());
        for (i, x) in entries.iter().enumerate() {
            m.set(i, i, x.clone());
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vector {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    fn same_shape(&self, o: &Mat) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        if self.field != o.field {
            return Err(Error::FieldMismatch(self.field.tag(), o.field.tag()));
        }
        Ok(())
    }

    fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!("{}x{} is not square", self.rows, self.cols)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Mat) -> Result<Mat> {
        self.same_shape(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(Mat { data, ..self.clone_shape() })
    }

    pub fn sub(&self, o: &Mat) -> Result<Mat> {
        self.same_shape(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        Ok(Mat { data, ..self.clone_shape() })
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        let data = self.data.iter().map(|a| a * s).collect();
        Mat { data, ..self.clone_shape() }
    }

    fn clone_shape(&self) -> Mat {
        Mat { field: self.field, rows: self.rows, cols: self.cols, data: Vec::new() }
    }

    pub fn mul(&self, o: &Mat) -> Result<Mat> {
        if self.cols != o.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        if self.field != o.field {
            return Err(Error::FieldMismatch(self.field.tag(), o.field.tag()));
        }
        let mut out = Mat::zeros(self.field, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] = &out.data[idx] + &(a * b);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vector {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|i| {
                let mut acc = self.field.zero();
                for (j, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        acc = &acc + &(self.get(i, j) * x);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Result<Mat> {
        self.require_square()?;
        let mut acc = Mat::identity(self.field, self.rows);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Block-diagonal sum `self ⊕ o`.
    pub fn direct_sum(&self, o: &Mat) -> Mat {
        let mut out = Mat::zeros(self.field, self.rows + o.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..o.rows {
            for j in 0..o.cols {
                out.set(self.rows + i, self.cols + j, o.get(i, j).clone());
            }
        }
        out
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("pivot is nonzero");
            for j in c..m.cols {
                let x = m.get(r, j) * &inv;
                m.set(r, j, x);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let x = m.get(i, j) - &(&f * m.get(r, j));
                    m.set(i, j, x);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn det(&self) -> Result<Scalar> {
        self.require_square()?;
        let mut m = self.clone();
        let mut det = self.field.one();
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                return Ok(self.field.zero());
            };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = &det * &piv;
            let inv = piv.inv().expect("pivot is nonzero");
            for i in c + 1..m.rows {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c) * &inv;
                for j in c..m.cols {
                    let x = m.get(i, j) - &(&f * m.get(c, j));
                    m.set(i, j, x);
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Result<Mat> {
        self.require_square()?;
        let n = self.rows;
        let mut aug = Mat::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, self.field.one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        let mut out = Mat::zeros(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, r.get(i, n + j).clone());
            }
        }
        Ok(out)
    }

    /// Basis of the null space, lowest free column first.
    pub fn kernel(&self) -> Vec<Vector> {
        let (r, pivots) = self.rref();
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![self.field.zero(); self.cols];
            v[free] = self.field.one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.get(row, free);
            }
            basis.push(v);
        }
        basis
    }

    /// Basis of the column space: the pivot columns of `self`.
    pub fn image(&self) -> Vec<Vector> {
        let (_, pivots) = self.rref();
        pivots.iter().map(|&c| self.column(c)).collect()
    }

    /// Solves `self · x = b`, returning one solution when consistent.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vector> {
        let mut aug = Mat::zeros(self.field, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![self.field.zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(row, self.cols).clone();
        }
        Some(x)
    }

    /// `leading·A² + c1·A + c0·I`.
    pub fn eval_quad(&self, p: &QuadPoly) -> Result<Mat> {
        self.require_square()?;
        let sq = self.mul(self)?;
        sq.scale(p.leading()).add(&self.scale(p.c1()))?.add(&Mat::scalar(p.c0(), self.rows))
    }

    pub fn annihilates(&self, p: &QuadPoly) -> bool {
        self.eval_quad(p).map(|m| m.is_zero()).unwrap_or(false)
    }

    /// `tr(p)·I − A`, satisfying `A·A⋆ = N(p)·I`.
    pub fn star(&self, p: &QuadPoly) -> Result<Mat> {
        if !self.annihilates(p) {
            return Err(Error::NotAnnihilated);
        }
        Mat::scalar(&p.trace(), self.rows).sub(self)
    }

    /// Companion matrix `[[0, −c0], [1, −c1]]` of the monic normalization.
    pub fn companion(p: &QuadPoly) -> Mat {
        let m = p.monic();
        let f = p.field();
        Mat::from_rows(f, vec![vec![f.zero(), -m.c0()], vec![f.one(), -m.c1()]])
            .expect("2x2 companion")
    }

    /// `P · self · P⁻¹`.
    pub fn conjugate_by(&self, p: &Mat) -> Result<Mat> {
        p.mul(self)?.mul(&p.inverse()?)
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatRepr {
    field: Field,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<String>>,
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        MatRepr { field: self.field, rows: self.rows, cols: self.cols, entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Mat, D::Error> {
        use serde::de::Error as _;
        let r = MatRepr::deserialize(d)?;
        if r.entries.len() != r.rows || r.entries.iter().any(|row| row.len() != r.cols) {
            return Err(D::Error::custom("matrix entries do not match rows/cols"));
        }
        let mut data = Vec::with_capacity(r.rows * r.cols);
        for row in &r.entries {
            for x in row {
                data.push(r.field.parse(x).map_err(D::Error::custom)?);
            }
        }
        Ok(Mat { field: r.field, rows: r.rows, cols: r.cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Field {
        Field::prime(5).unwrap()
    }

    #[test]
    fn basic_ops() {
        let q = Field::Rational;
        assert_eq!(Mat::from_i64(q, &[&[0, 1], &[1, 0]]).det().unwrap(), q.from_i64(-1));
        let c = Mat::from_i64(f5(), &[&[0, 3], &[2, 0]]);
        assert_eq!(c.inverse().unwrap(), c);
        assert_eq!(Mat::zeros(q, 2, 2).rank(), 0);
        assert_eq!(Mat::zeros(q, 2, 2).inverse(), Err(Error::Singular));
        assert!(Mat::zeros(q, 2, 3).mul(&Mat::zeros(q, 2, 3)).is_err());
    }

    #[test]
    fn annihilation_examples() {
        let q = Field::Rational;
        let swap = Mat::from_i64(q, &[&[0, 1], &[1, 0]]);
        let jordan = Mat::from_i64(q, &[&[1, 1], &[0, 1]]);
        let inv = QuadPoly::parse("t^2-1", q).unwrap();
        let unip = QuadPoly::parse("(t-1)^2", q).unwrap();
        assert!(swap.annihilates(&inv));
        assert!(jordan.annihilates(&unip));
        assert!(!jordan.annihilates(&inv));
    }

    #[test]
    fn star_examples() {
        let q = Field::Rational;
        let inv = QuadPoly::parse("t^2-1", q).unwrap();
        let unip = QuadPoly::parse("(t-1)^2", q).unwrap();
        let swap = Mat::from_i64(q, &[&[0, 1], &[1, 0]]);
        assert_eq!(swap.star(&inv).unwrap(), swap.scale(&q.from_i64(-1)));
        assert_eq!(Mat::identity(q, 2).star(&unip).unwrap(), Mat::identity(q, 2));
        let jordan = Mat::from_i64(q, &[&[1, 1], &[0, 1]]);
        assert_eq!(jordan.star(&unip).unwrap(), Mat::from_i64(q, &[&[1, -1], &[0, 1]]));
        assert_eq!(jordan.star(&inv), Err(Error::NotAnnihilated));
    }

    #[test]
    fn companion_examples() {
        let q = Field::Rational;
        for (s, want) in [
            ("t^2-1", [[0, 1], [1, 0]]),
            ("t^2-3*t+2", [[0, -2], [1, 3]]),
            ("(t-1)^2", [[0, -1], [1, 2]]),
        ] {
            let p = QuadPoly::parse(s, q).unwrap();
            let c = Mat::companion(&p);
            assert_eq!(c, Mat::from_i64(q, &[&want[0], &want[1]]));
            assert!(c.annihilates(&p));
        }
    }

    #[test]
    fn json_round_trip() {
        let m = Mat::from_i64(f5(), &[&[1, 0], &[0, 4]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"field":"F5","rows":2,"cols":2,"entries":[["1","0"],["0","4"]]}"#);
        assert_eq!(serde_json::from_str::<Mat>(&s).unwrap(), m);
        assert!(serde_json::from_str::<Mat>(r#"{"field":"F5","rows":2,"cols":2,"entries":[["1"]]}"#).is_err());
    }

    #[test]
    fn kernel_and_solve() {
        let q = Field::Rational;
        let m = Mat::from_i64(q, &[&[1, 2, 3], &[2, 4, 6]]);
        let k = m.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(m.mul_vec(v).iter().all(Scalar::is_zero));
        }
        let x = m.solve(&[q.from_i64(1), q.from_i64(2)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![q.from_i64(1), q.from_i64(2)]);
        assert!(m.solve(&[q.from_i64(1), q.from_i64(3)]).is_none());
    }
}
