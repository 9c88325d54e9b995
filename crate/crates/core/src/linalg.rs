//! Thin helpers over faer dense matrices.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;

pub type Mat = faer::Mat<f64>;
pub type CMat = faer::Mat<faer::c64>;
pub use faer::c64;

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn row_dot(a: &Mat, i: usize, x: &[f64]) -> f64 {
    (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum()
}

pub fn matpow(a: &Mat, k: usize) -> Mat {
    assert!(k >= 1);
    let mut p = a.clone();
    for _ in 1..k {
        p = &p * a;
    }
    p
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Dense LU solve with partial pivoting; rejects non-finite output.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Singular("LU solve produced non-finite values".into()))
    }
}

/// Minimum-norm solution of `a x = b` discarding singular values below
/// `rcond * s_max`. Returns the solution and the retained rank.
pub fn tsvd_solve(a: &Mat, b: &[f64], rcond: f64) -> Result<(Vec<f64>, usize)> {
    let svd = a
        .svd()
        .map_err(|e| Error::Singular(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = s.dim();
    let smax = (0..k).map(|i| s[i]).fold(0.0_f64, f64::max);
    if !(smax > 0.0) {
        return Err(Error::Singular("zero matrix".into()));
    }
    let mut x = vec![0.0; a.ncols()];
    let mut rank = 0;
    for i in 0..k {
        let si = s[i];
        if si <= rcond * smax {
            continue;
        }
        rank += 1;
        let ui = u.col(i);
        let coef: f64 = (0..b.len()).map(|r| ui[r] * b[r]).sum::<f64>() / si;
        let vi = v.col(i);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coef * vi[j];
        }
    }
    Ok((x, rank))
}
