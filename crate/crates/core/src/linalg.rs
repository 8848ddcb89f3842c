//! Thin layer over faer for the dense complex algebra used by the solvers.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

/// Partial-pivoting LU factorization with a singularity screen.
pub struct Lu {
    inner: PartialPivLu<C64>,
    n: usize,
}

impl Lu {
    pub fn new(a: MatRef<'_, C64>, lambda: C64) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let inner = a.partial_piv_lu();
        // A pivot that underflows relative to the matrix scale means a numerically singular system.
        let u = inner.U();
        let scale = inf_norm(a).max(f64::MIN_POSITIVE);
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            min_pivot = min_pivot.min(u[(i, i)].norm());
        }
        if !(min_pivot > 1e-14 * scale) || !min_pivot.is_finite() {
            return Err(Error::Singular { re: lambda.re, im: lambda.im });
        }
        Ok(Self { inner, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = col_from(b);
        self.inner.solve_in_place(x.as_mut());
        to_vec(&x)
    }

    /// Solves Aᵀx = b.
    pub fn solve_transpose(&self, b: &[C64]) -> Vec<C64> {
        let mut x = col_from(b);
        self.inner.solve_transpose_in_place(x.as_mut());
        to_vec(&x)
    }

    pub fn solve_mat(&self, b: MatRef<'_, C64>) -> CMat {
        let mut x = b.to_owned();
        self.inner.solve_in_place(x.as_mut());
        x
    }

    pub fn solve_transpose_mat(&self, b: MatRef<'_, C64>) -> CMat {
        let mut x = b.to_owned();
        self.inner.solve_transpose_in_place(x.as_mut());
        x
    }
}

fn col_from(b: &[C64]) -> CMat {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn to_vec(x: &CMat) -> Vec<C64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

pub fn matvec(a: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let xm = col_from(x);
    let y = a * &xm;
    to_vec(&y)
}

pub fn matmul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    a * b
}

/// Maximum absolute row sum, the operator norm induced by the sup norm.
pub fn inf_norm(a: MatRef<'_, C64>) -> f64 {
    let mut rows = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        for (i, r) in rows.iter_mut().enumerate() {
            *r += a[(i, j)].norm();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Weighted adjoint W⁻¹AᵀW: the matrix of the transposed integral operator
/// when quadrature weights are folded into the columns.
pub fn weighted_transpose(a: MatRef<'_, C64>, w: &[f64]) -> CMat {
    assert_eq!(a.nrows(), w.len());
    assert_eq!(a.ncols(), w.len());
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(j, i)] * (w[j] / w[i]))
}

pub fn sub_block(a: MatRef<'_, C64>, r0: usize, r1: usize, c0: usize, c1: usize) -> CMat {
    a.submatrix(r0, c0, r1 - r0, c1 - c0).to_owned()
}

pub fn sup_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_transposes() {
        let a = Mat::from_fn(5, 5, |i, j| {
            C64::new(if i == j { 4.0 } else { 0.3 * (i as f64 - j as f64) }, 0.1 * (i * j) as f64)
        });
        let lu = Lu::new(a.as_ref(), C64::new(1.0, 0.0)).unwrap();
        let b: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0)).collect();
        let x = lu.solve(&b);
        let r = matvec(a.as_ref(), &x);
        for k in 0..5 {
            assert!((r[k] - b[k]).norm() < 1e-13);
        }
        let xt = lu.solve_transpose(&b);
        let at = a.transpose().to_owned();
        let rt = matvec(at.as_ref(), &xt);
        for k in 0..5 {
            assert!((rt[k] - b[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Mat::from_fn(3, 3, |i, _| C64::new(i as f64, 0.0));
        assert!(Lu::new(a.as_ref(), C64::new(2.0, 0.0)).is_err());
    }
}
