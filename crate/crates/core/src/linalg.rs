//! Dense matrices over a prime field F_p.
//!
//! Vectors are rows. A subspace is stored as the nonzero rows of its reduced
//! row echelon form, which doubles as its canonical form: two subspaces are
//! equal exactly when their reduced bases are equal.

use crate::fp;
use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Mat {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Mat {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Mat {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Builds a matrix from rows, reducing every entry mod `p`.
    pub fn from_rows(p: u32, cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(p, rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix row");
            for (j, &x) in r.iter().enumerate() {
                m.data[i * cols + j] = x % p;
            }
        }
        m
    }

    pub fn from_flat(p: u32, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), rows * cols);
        let data = data.into_iter().map(|x| x % p).collect();
        Mat {
            p,
            rows,
            cols,
            data,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.p, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let p = self.p as u64;
        let mut out = Mat::zeros(self.p, self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k] as u64;
                if a == 0 {
                    continue;
                }
                let row = other.row(k);
                for (slot, &b) in acc.iter_mut().zip(row) {
                    *slot += a * b as u64;
                }
                if k % 1024 == 1023 {
                    acc.iter_mut().for_each(|a| *a %= p);
                }
            }
            for (j, a) in acc.iter().enumerate() {
                out.data[i * other.cols + j] = (a % p) as u32;
            }
        }
        out
    }

    /// `self * v` for a column vector given as a slice.
    pub fn apply(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(self.cols, v.len());
        let p = self.p as u64;
        (0..self.rows)
            .map(|i| {
                let s: u64 = self
                    .row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a as u64 * b as u64)
                    .sum();
                (s % p) as u32
            })
            .collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| fp::add(a, b, self.p))
            .collect();
        self.with_data(data)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| fp::sub(a, b, self.p))
            .collect();
        self.with_data(data)
    }

    pub fn scale(&self, c: u32) -> Mat {
        let data = self.data.iter().map(|&a| fp::mul(a, c, self.p)).collect();
        self.with_data(data)
    }

    fn with_data(&self, data: Vec<u32>) -> Mat {
        Mat {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn pow(&self, mut k: u64) -> Mat {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Mat::identity(self.p, self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn trace(&self) -> u32 {
        assert!(self.is_square());
        (0..self.rows).fold(0, |t, i| fp::add(t, self.get(i, i), self.p))
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat {
            p: self.p,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut out = Mat::zeros(self.p, self.rows, cols);
        for i in 0..self.rows {
            out.data[i * cols..i * cols + self.cols].copy_from_slice(self.row(i));
            out.data[i * cols + self.cols..(i + 1) * cols].copy_from_slice(other.row(i));
        }
        out
    }

    /// Submatrix of the given rows.
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Mat {
            p: self.p,
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn column_range(&self, start: usize, end: usize) -> Mat {
        let w = end - start;
        let mut out = Mat::zeros(self.p, self.rows, w);
        for i in 0..self.rows {
            out.data[i * w..(i + 1) * w].copy_from_slice(&self.row(i)[start..end]);
        }
        out
    }

    /// Reduced row echelon form. Returns the nonzero rows and the pivot columns.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let p = self.p;
        let c = self.cols;
        let mut a = self.data.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..c {
            if r == self.rows {
                break;
            }
            let Some(piv) = (r..self.rows).find(|&i| a[i * c + col] != 0) else {
                continue;
            };
            if piv != r {
                for k in 0..c {
                    a.swap(piv * c + k, r * c + k);
                }
            }
            let iv = fp::inv(a[r * c + col], p);
            for k in col..c {
                a[r * c + k] = fp::mul(a[r * c + k], iv, p);
            }
            let (before, rest) = a.split_at_mut(r * c);
            let (pivot_row, after) = rest.split_at_mut(c);
            let eliminate = |row: &mut [u32]| {
                let f = row[col];
                if f == 0 {
                    return;
                }
                let nf = (p - f) as u64;
                for k in col..c {
                    let b = pivot_row[k];
                    if b != 0 {
                        row[k] = ((row[k] as u64 + nf * b as u64) % p as u64) as u32;
                    }
                }
            };
            before.chunks_mut(c).for_each(eliminate);
            after.chunks_mut(c).for_each(eliminate);
            pivots.push(col);
            r += 1;
        }
        a.truncate(r * c);
        (
            Mat {
                p,
                rows: r,
                cols: c,
                data: a,
            },
            pivots,
        )
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis (as rows) of `{x : self * x = 0}`.
    pub fn kernel(&self) -> Mat {
        let (r, pivots) = self.rref();
        let c = self.cols;
        let p = self.p;
        let free: Vec<usize> = (0..c).filter(|j| !pivots.contains(j)).collect();
        let mut out = Mat::zeros(p, free.len(), c);
        for (k, &f) in free.iter().enumerate() {
            out.data[k * c + f] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                out.data[k * c + pc] = fp::neg(r.get(i, f), p);
            }
        }
        out
    }

    /// Basis (as rows) of `{y : y * self = 0}`.
    pub fn left_kernel(&self) -> Mat {
        self.transpose().kernel()
    }

    pub fn inverse(&self) -> Option<Mat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&Mat::identity(self.p, n));
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(r.column_range(n, 2 * n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Lexicographic comparison of the flattened rows, fewer rows first on ties.
    pub fn lex_cmp(&self, other: &Mat) -> std::cmp::Ordering {
        self.data
            .cmp(&other.data)
            .then(self.rows.cmp(&other.rows))
    }
}

/// A subspace of F_p^n in canonical (reduced echelon) form.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Subspace {
    basis: Mat,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(p: u32, n: usize) -> Self {
        Subspace {
            basis: Mat::zeros(p, 0, n),
            pivots: Vec::new(),
        }
    }

    pub fn full(p: u32, n: usize) -> Self {
        Subspace {
            basis: Mat::identity(p, n),
            pivots: (0..n).collect(),
        }
    }

    /// Row space of `m`.
    pub fn span(m: &Mat) -> Self {
        let (basis, pivots) = m.rref();
        Subspace { basis, pivots }
    }

    pub fn span_vecs(p: u32, n: usize, vs: &[Vec<u32>]) -> Self {
        Self::span(&Mat::from_rows(p, n, vs))
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }
    pub fn ambient_dim(&self) -> usize {
        self.basis.cols()
    }
    pub fn basis(&self) -> &Mat {
        &self.basis
    }
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
    pub fn p(&self) -> u32 {
        self.basis.p()
    }

    /// Coordinates of `v` with respect to the reduced basis, if `v` lies in the span.
    pub fn coords(&self, v: &[u32]) -> Option<Vec<u32>> {
        let p = self.p();
        let c: Vec<u32> = self.pivots.iter().map(|&j| v[j]).collect();
        let mut w = v.to_vec();
        for (i, &ci) in c.iter().enumerate() {
            if ci == 0 {
                continue;
            }
            for (k, x) in w.iter_mut().enumerate() {
                *x = fp::sub(*x, fp::mul(ci, self.basis.get(i, k), p), p);
            }
        }
        w.iter().all(|&x| x == 0).then_some(c)
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.coords(v).is_some()
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|i| self.contains(other.basis.row(i)))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(&self.basis.vstack(&other.basis))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let n = self.ambient_dim();
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(self.p(), n);
        }
        let stacked = self.basis.vstack(&other.basis);
        let lk = stacked.left_kernel();
        let a = lk.column_range(0, self.dim());
        Subspace::span(&a.mul(&self.basis))
    }

    /// Image of the subspace under the linear map `v -> m v` (column convention).
    pub fn image_under(&self, m: &Mat) -> Subspace {
        Subspace::span(&self.basis.mul(&m.transpose()))
    }

    /// True when `m v` lies in the subspace for every basis vector `v`.
    pub fn is_stable_under(&self, m: &Mat) -> bool {
        let img = self.basis.mul(&m.transpose());
        (0..img.rows()).all(|i| self.contains(img.row(i)))
    }

    /// Restriction of `m` (which must stabilize the subspace) to the reduced basis.
    pub fn restrict(&self, m: &Mat) -> Mat {
        let d = self.dim();
        let img = self.basis.mul(&m.transpose());
        let mut out = Mat::zeros(self.p(), d, d);
        for j in 0..d {
            let c = self
                .coords(img.row(j))
                .expect("matrix does not stabilize the subspace");
            for (i, x) in c.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        out
    }
}

/// Solves `eqs * x = rhs`. Returns one solution together with a basis of the
/// solution space of the homogeneous system, or `None` if inconsistent.
pub fn solve_affine(p: u32, unknowns: usize, eqs: &Mat, rhs: &[u32]) -> Option<(Vec<u32>, Mat)> {
    assert_eq!(eqs.cols(), unknowns);
    assert_eq!(eqs.rows(), rhs.len());
    let b = Mat::from_flat(p, rhs.len(), 1, rhs.to_vec());
    let aug = eqs.hstack(&b);
    let (r, pivots) = aug.rref();
    if pivots.last() == Some(&unknowns) {
        return None;
    }
    let mut x = vec![0u32; unknowns];
    for (i, &pc) in pivots.iter().enumerate() {
        x[pc] = r.get(i, unknowns);
    }
    Some((x, r.column_range(0, unknowns).kernel()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_rank() {
        let m = Mat::from_rows(3, 3, &[vec![1, 2, 0], vec![2, 1, 0], vec![0, 0, 1]]);
        // rows 1 and 2 are dependent over F_3 (row2 = 2*row1)
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn kernel_is_annihilated() {
        let m = Mat::from_rows(5, 4, &[vec![1, 2, 3, 4], vec![0, 1, 1, 0]]);
        let k = m.kernel();
        assert_eq!(k.rows(), 2);
        for i in 0..k.rows() {
            assert!(m.apply(k.row(i)).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::from_rows(7, 3, &[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]]);
        let inv = m.inverse().expect("invertible");
        assert_eq!(m.mul(&inv), Mat::identity(7, 3));
        let sing = Mat::from_rows(2, 2, &[vec![1, 1], vec![1, 1]]);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn subspace_intersection() {
        let u = Subspace::span_vecs(2, 4, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0]]);
        let w = Subspace::span_vecs(2, 4, &[vec![1, 1, 0, 0], vec![0, 0, 1, 0]]);
        let i = u.intersect(&w);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&[1, 1, 0, 0]));
    }

    #[test]
    fn affine_solve() {
        // x + y = 1, x - y = 0 over F_5 -> x = y = 3
        let eqs = Mat::from_rows(5, 2, &[vec![1, 1], vec![1, 4]]);
        let (x, k) = solve_affine(5, 2, &eqs, &[1, 0]).unwrap();
        assert_eq!(x, vec![3, 3]);
        assert_eq!(k.rows(), 0);
    }
}
