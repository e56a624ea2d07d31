//! Dense matrices of order at most three.
//!
//! Spatial dimension is restricted to 1..=3, so matrices live on the stack and
//! every routine here is allocation free.

use crate::error::{Error, Result};
use crate::real::Real;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<T> {
    n: usize,
    m: [[T; MAX_DIM]; MAX_DIM],
}

impl<T: Real> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix order {n} out of range");
        Mat {
            n,
            m: [[T::zero(); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        let mut a = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            a.m[i][i] = v;
        }
        a
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        Self::diag(&vec![s; n])
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if !(1..=MAX_DIM).contains(&n) || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix of order 1..=3, got {} rows",
                n
            )));
        }
        let mut a = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                a.m[i][j] = v;
            }
        }
        Ok(a)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.m[i][j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.m[i][j]).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        for i in 0..self.n {
            for j in 0..i {
                let scale = T::one().max(self.m[i][j].abs()).max(self.m[j][i].abs());
                if (self.m[i][j] - self.m[j][i]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// `y = A x` written into the first `n` entries of `out`.
    #[inline]
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        for i in 0..self.n {
            let mut s = T::zero();
            for j in 0..self.n {
                s += self.m[i][j] * x[j];
            }
            out[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut c = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut s = T::zero();
                for k in 0..self.n {
                    s += self.m[i][k] * other.m[k][j];
                }
                c.m[i][j] = s;
            }
        }
        c
    }

    /// Quadratic form `<A x, x>`.
    pub fn quad_form(&self, x: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.m[i][j] * x[i] * x[j];
            }
        }
        s
    }

    pub fn det(&self) -> T {
        let a = &self.m;
        match self.n {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.m;
        let mut inv = Self::identity(n).m;
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].abs())
            .fold(T::zero(), T::max);
        if scale == T::zero() {
            return Err(Error::SingularDiffusion);
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
                .unwrap();
            if a[pivot][col].abs() <= scale * T::epsilon() * T::lit(16.0) {
                return Err(Error::SingularDiffusion);
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col];
            for j in 0..n {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        Ok(Mat { n, m: inv })
    }

    /// Lower-triangular `L` with `A = L L^T`.
    pub fn cholesky(&self) -> Result<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.m[i][j];
                for k in 0..j {
                    s -= l.m[i][k] * l.m[j][k];
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(Error::SingularDiffusion);
                    }
                    l.m[i][i] = s.sqrt();
                } else {
                    l.m[i][j] = s / l.m[j][j];
                }
            }
        }
        Ok(l)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let mut a = self.m;
        // symmetrize defensively against round-off in the input
        for i in 0..n {
            for j in 0..i {
                let s = (a[i][j] + a[j][i]) * T::lit(0.5);
                a[i][j] = s;
                a[j][i] = s;
            }
        }
        for _sweep in 0..64 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            let diag: T = (0..n).map(|i| a[i][i] * a[i][i]).sum();
            if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q] == T::zero() {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }
}
