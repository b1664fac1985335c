use crate::algebra::Scalar;
use crate::error::Result;
use crate::linalg::frobenius::restrict;
use crate::linalg::mat::{Mat, Vector};

/// A minimal `W ⊇ im w` with `W + ker w` the whole space, and the matrix of `w` on it.
#[derive(Debug, Clone)]
pub struct Compression {
    /// Basis of `W` as columns in the ambient coordinates.
    pub basis: Vec<Vector>,
    /// Matrix of `w|W` in that basis.
    pub matrix: Mat,
}

fn independent_of(f: crate::algebra::Field, n: usize, span: &[Vector], v: &[Scalar]) -> bool {
    let mut cols = span.to_vec();
    cols.push(v.to_vec());
    Mat::from_columns(f, n, &cols).rank() == cols.len()
}

/// Compresses a finite-rank endomorphism given by its matrix `w` on a finite coordinate space
/// that contains its support and image.
pub fn compress(w: &Mat) -> Compression {
    let f = w.field();
    let n = w.rows();
    let image = w.image();
    let kernel = w.kernel();
    // basis of im w that starts with im w ∩ ker w
    let mut stacked = image.clone();
    stacked.extend(kernel.iter().cloned());
    let inter = intersection(f, n, &image, &kernel);
    let mut basis = inter.clone();
    for v in &image {
        if independent_of(f, n, &basis, v) {
            basis.push(v.clone());
        }
    }
    // complete to a complement of ker w with lowest-index unit vectors
    let mut with_kernel: Vec<Vector> = kernel.clone();
    for v in &basis[inter.len()..] {
        with_kernel.push(v.clone());
    }
    for i in 0..n {
        if with_kernel.len() == n {
            break;
        }
        let mut e = vec![f.zero(); n];
        e[i] = f.one();
        if independent_of(f, n, &with_kernel, &e) {
            with_kernel.push(e.clone());
            basis.push(e);
        }
    }
    let b = Mat::from_columns(f, n, &basis);
    let matrix = restrict(w, &b).expect("W contains the image of w");
    Compression { basis, matrix }
}

/// Basis of `span(a) ∩ span(b)`.
pub fn intersection(f: crate::algebra::Field, n: usize, a: &[Vector], b: &[Vector]) -> Vec<Vector> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut cols = a.to_vec();
    cols.extend(b.iter().map(|v| v.iter().map(|x| -x).collect::<Vector>()));
    let m = Mat::from_columns(f, n, &cols);
    let am = Mat::from_columns(f, n, a);
    let mut out: Vec<Vector> = Vec::new();
    for k in m.kernel() {
        let v = am.mul_vec(&k[..a.len()]);
        if !v.iter().all(Scalar::is_zero) && independent_of(f, n, &out, &v) {
            out.push(v);
        }
    }
    out
}

/// Determinant of `λ·I + w` restricted to `im w`; the empty determinant is 1.
pub fn induced_det(lambda: &Scalar, w: &Mat) -> Result<Scalar> {
    let f = w.field();
    let n = w.rows();
    let image = w.image();
    if image.is_empty() {
        return Ok(f.one());
    }
    let u = Mat::scalar(lambda, n).add(w)?;
    let b = Mat::from_columns(f, n, &image);
    restrict(&u, &b)?.det()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;
    use crate::linalg::frobenius::similar;

    #[test]
    fn compress_examples() {
        let q = Field::Rational;
        let w = Mat::from_i64(q, &[&[1, 0], &[0, 0]]);
        assert_eq!(compress(&w).matrix, Mat::from_i64(q, &[&[1]]));

        // w(e0) = e1
        let w = Mat::from_i64(q, &[&[0, 0], &[1, 0]]);
        let c = compress(&w);
        assert_eq!(c.matrix.rows(), 2);
        assert!(similar(&c.matrix, &Mat::from_i64(q, &[&[0, 1], &[0, 0]])));

        let w = Mat::zeros(q, 3, 3);
        assert_eq!(compress(&w).matrix.rows(), 0);
    }

    #[test]
    fn compression_is_minimal_and_valid() {
        let f = Field::prime(3).unwrap();
        let w = Mat::from_i64(f, &[&[0, 1, 0, 0], &[0, 0, 0, 0], &[0, 0, 2, 0], &[0, 0, 0, 0]]);
        let c = compress(&w);
        let n = 4;
        let image = w.image();
        let kernel = w.kernel();
        let s = intersection(f, n, &image, &kernel).len();
        assert_eq!(c.basis.len(), image.len() + s);
        let mut all = c.basis.clone();
        all.extend(kernel);
        assert_eq!(Mat::from_columns(f, n, &all).rank(), n);
    }

    #[test]
    fn induced_det_examples() {
        let f5 = Field::prime(5).unwrap();
        let w = Mat::from_i64(f5, &[&[1, 0], &[0, 0]]);
        assert_eq!(induced_det(&f5.from_i64(2), &w).unwrap(), f5.from_i64(3));
        assert_eq!(induced_det(&f5.from_i64(2), &Mat::zeros(f5, 2, 2)).unwrap(), f5.one());
        let w = Mat::from_i64(f5, &[&[0, 0], &[1, 0]]);
        assert_eq!(induced_det(&f5.one(), &w).unwrap(), f5.one());
    }
}
