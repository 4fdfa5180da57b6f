//! Small dense matrices over [`Dd`].

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::dd::Dd;

#[derive(Clone, PartialEq)]
pub struct DdMat {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl std::fmt::Debug for DdMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.to_f64())
    }
}

impl Index<(usize, usize)> for DdMat {
    type Output = Dd;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Dd {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DdMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Dd {
        &mut self.data[i * self.cols + j]
    }
}

impl From<&DMatrix<f64>> for DdMat {
    fn from(m: &DMatrix<f64>) -> Self {
        DdMat::from_fn(m.nrows(), m.ncols(), |i, j| Dd::new(m[(i, j)]))
    }
}

impl From<DMatrix<f64>> for DdMat {
    fn from(m: DMatrix<f64>) -> Self {
        DdMat::from(&m)
    }
}

impl DdMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DdMat {
            rows,
            cols,
            data: vec![Dd::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DdMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Dd::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Dd) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DdMat { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].to_f64())
    }

    pub fn transpose(&self) -> DdMat {
        DdMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &DdMat) -> DdMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DdMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Dd::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Dd]) -> Vec<Dd> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn tr_mul_vec(&self, v: &[Dd]) -> Vec<Dd> {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * v[i]).sum())
            .collect()
    }

    pub fn add(&self, other: &DdMat) -> DdMat {
        let mut out = self.clone();
        out.axpy(Dd::ONE, other);
        out
    }

    pub fn sub(&self, other: &DdMat) -> DdMat {
        let mut out = self.clone();
        out.axpy(-Dd::ONE, other);
        out
    }

    pub fn scale(&self, a: Dd) -> DdMat {
        DdMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * a).collect(),
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: Dd, x: &DdMat) {
        assert_eq!((self.rows, self.cols), (x.rows, x.cols));
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &DdMat) -> Dd {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm(&self) -> Dd {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Dd {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * 0.5;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<Dd> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Lower Cholesky factor, `None` unless strictly positive definite.
    pub fn cholesky(&self) -> Option<DdMat> {
        let n = self.rows;
        let mut l = DdMat::zeros(n, n);
        for j in 0..n {
            let mut s = self[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if !(s.hi() > 0.0) || !s.is_finite() {
                return None;
            }
            let d = s.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Inverse of a lower-triangular matrix.
    pub fn lower_inverse(&self) -> DdMat {
        let n = self.rows;
        let mut inv = DdMat::zeros(n, n);
        for j in 0..n {
            inv[(j, j)] = self[(j, j)].recip();
            for i in j + 1..n {
                let mut s = Dd::ZERO;
                for k in j..i {
                    s += self[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -s / self[(i, i)];
            }
        }
        inv
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Option<DdMat> {
        let l = self.cholesky()?;
        let li = l.lower_inverse();
        let mut inv = li.transpose().mul(&li);
        inv.symmetrize();
        Some(inv)
    }

    fn solve_cholesky(l: &DdMat, b: &[Dd]) -> Vec<Dd> {
        let n = l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// Solve with partial-pivot LU.
    pub fn lu_solve(&self, b: &[Dd]) -> Option<Vec<Dd>> {
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| {
                a[(i, k)]
                    .abs()
                    .partial_cmp(&a[(j, k)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(p, k)] == Dd::ZERO || !a[(p, k)].is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                x.swap(k, p);
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f == Dd::ZERO {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                let v = x[k];
                x[i] -= f * v;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= a[(i, j)] * x[j];
            }
            x[i] = s / a[(i, i)];
        }
        Some(x)
    }

    /// Solve a symmetric system: Cholesky when possible, LU otherwise, then one
    /// round of iterative refinement.
    pub fn solve_symmetric(&self, b: &[Dd]) -> Option<Vec<Dd>> {
        let chol = self.cholesky();
        let solve = |rhs: &[Dd]| match &chol {
            Some(l) => Some(DdMat::solve_cholesky(l, rhs)),
            None => self.lu_solve(rhs),
        };
        let mut x = solve(b)?;
        let ax = self.mul_vec(&x);
        let r: Vec<Dd> = b.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
        let dx = solve(&r)?;
        for (x, d) in x.iter_mut().zip(dx) {
            *x += d;
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }

    /// Householder QR with column pivoting: `self[:, perm] = q * r`.
    pub fn qr_pivoted(&self) -> PivotedQr {
        let (m, p) = (self.rows, self.cols);
        let mut r = self.clone();
        let mut q = DdMat::identity(m);
        let mut perm: Vec<usize> = (0..p).collect();
        for k in 0..m.min(p) {
            let norm2 = |r: &DdMat, j: usize| -> Dd { (k..m).map(|i| r[(i, j)] * r[(i, j)]).sum() };
            let mut best = k;
            let mut best_norm = norm2(&r, k);
            for j in k + 1..p {
                let nj = norm2(&r, j);
                if nj > best_norm {
                    best = j;
                    best_norm = nj;
                }
            }
            if best != k {
                for i in 0..m {
                    let t = r[(i, k)];
                    r[(i, k)] = r[(i, best)];
                    r[(i, best)] = t;
                }
                perm.swap(k, best);
            }
            let norm = best_norm.sqrt();
            if norm == Dd::ZERO {
                continue;
            }
            let alpha = if r[(k, k)].hi() >= 0.0 { -norm } else { norm };
            let mut v: Vec<Dd> = (k..m).map(|i| r[(i, k)]).collect();
            v[0] -= alpha;
            let vtv: Dd = v.iter().map(|&x| x * x).sum();
            if vtv == Dd::ZERO {
                continue;
            }
            let tau = Dd::new(2.0) / vtv;
            for j in k..p {
                let s: Dd = v.iter().enumerate().map(|(t, &vi)| vi * r[(k + t, j)]).sum();
                let s = s * tau;
                for (t, &vi) in v.iter().enumerate() {
                    r[(k + t, j)] -= s * vi;
                }
            }
            for i in 0..m {
                let s: Dd = v.iter().enumerate().map(|(t, &vi)| q[(i, k + t)] * vi).sum();
                let s = s * tau;
                for (t, &vi) in v.iter().enumerate() {
                    q[(i, k + t)] -= s * vi;
                }
            }
            for i in k + 1..m {
                r[(i, k)] = Dd::ZERO;
            }
        }
        PivotedQr { q, r, perm }
    }

    /// Eigenvalues of a symmetric matrix, in f64.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let mut m = self.to_f64();
        m = (&m + m.transpose()) * 0.5;
        m.symmetric_eigenvalues().iter().copied().collect()
    }
}

pub struct PivotedQr {
    pub q: DdMat,
    pub r: DdMat,
    pub perm: Vec<usize>,
}

impl PivotedQr {
    /// Numerical rank at relative threshold `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let k = self.r.nrows().min(self.r.ncols());
        if k == 0 {
            return 0;
        }
        let top = self.r[(0, 0)].abs().to_f64();
        if top == 0.0 {
            return 0;
        }
        (0..k)
            .take_while(|&i| self.r[(i, i)].abs().to_f64() > tol * top)
            .count()
    }
}

pub fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm(a: &[Dd]) -> Dd {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DdMat {
        DdMat::from_fn(rows.len(), rows[0].len(), |i, j| Dd::new(rows[i][j]))
    }

    #[test]
    fn cholesky_inverse_and_solve() {
        let a = mat(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let inv = a.spd_inverse().unwrap();
        let prod = a.mul(&inv);
        assert!(prod.sub(&DdMat::identity(3)).max_abs() < 1e-30);
        let b = vec![Dd::new(1.0), Dd::new(-2.0), Dd::new(0.5)];
        let x = a.solve_symmetric(&b).unwrap();
        let r = a.mul_vec(&x);
        for (r, b) in r.iter().zip(&b) {
            assert!((*r - *b).abs().to_f64() < 1e-30);
        }
        assert!(mat(&[&[1.0, 2.0], &[2.0, 1.0]]).cholesky().is_none());
    }

    #[test]
    fn lu_handles_indefinite() {
        let a = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let x = a.lu_solve(&[Dd::new(3.0), Dd::new(5.0)]).unwrap();
        assert_eq!(x[0].to_f64(), 5.0);
        assert_eq!(x[1].to_f64(), 3.0);
    }

    #[test]
    fn pivoted_qr_reconstructs() {
        let a = mat(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0], &[1.0, 0.0, 1.0]]);
        let qr = a.qr_pivoted();
        let qtq = qr.q.transpose().mul(&qr.q);
        assert!(qtq.sub(&DdMat::identity(4)).max_abs() < 1e-30);
        let rec = qr.q.mul(&qr.r);
        for i in 0..4 {
            for (k, &j) in qr.perm.iter().enumerate() {
                assert!((rec[(i, k)] - a[(i, j)]).abs().to_f64() < 1e-28);
            }
        }
        assert_eq!(qr.rank(1e-20), 3);
        let singular = mat(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert_eq!(singular.qr_pivoted().rank(1e-20), 1);
    }

    #[test]
    fn lower_inverse_is_exact_enough() {
        let l = mat(&[&[2.0, 0.0, 0.0], &[1.0, 3.0, 0.0], &[-1.0, 0.5, 0.25]]);
        let li = l.lower_inverse();
        assert!(l.mul(&li).sub(&DdMat::identity(3)).max_abs() < 1e-30);
    }
}
