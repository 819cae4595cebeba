//! Thin helpers over `faer` for the dense complex matrices used throughout.

use faer::{c64, Mat, MatRef, Side};

use crate::{Error, Result};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("hermitian eigendecomposition: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map(|v| v.into_iter().collect())
        .map_err(|e| Error::LinAlg(format!("hermitian eigenvalues: {e:?}")))
}

/// General (non-Hermitian) eigendecomposition; eigenvectors are the columns.
pub fn eig(a: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .eigen()
        .map_err(|e| Error::LinAlg(format!("eigendecomposition: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Singular values in non-increasing order.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::LinAlg(format!("singular values: {e:?}")))
}

/// Full SVD `a = U S V^dag`, returning `(U, s)`.
pub fn left_singular(a: MatRef<'_, c64>) -> Result<(CMat, Vec<f64>)> {
    let svd = a
        .svd()
        .map_err(|e| Error::LinAlg(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((svd.U().to_owned(), s))
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn hermiticity_residual(a: MatRef<'_, c64>) -> f64 {
    max_abs_diff(a, a.adjoint().to_owned().as_ref())
}

/// `max |a^dag a - 1|`.
pub fn isometry_residual(a: MatRef<'_, c64>) -> f64 {
    let g = a.adjoint() * a;
    max_abs_diff(g.as_ref(), Mat::<c64>::identity(a.ncols(), a.ncols()).as_ref())
}

/// `a * x` for a real scalar.
pub fn scaled(a: MatRef<'_, c64>, x: f64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * x)
}

pub fn hermitize(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn transpose(a: MatRef<'_, c64>) -> CMat {
    a.transpose().to_owned()
}

/// Applies a real function to a Hermitian matrix through its eigenvalues.
pub fn hermitian_map(a: MatRef<'_, c64>, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eigh(a)?;
    Ok(reassemble(&vals.iter().map(|&x| f(x)).collect::<Vec<_>>(), vecs.as_ref()))
}

/// `V diag(vals) V^dag`.
pub fn reassemble(vals: &[f64], vecs: MatRef<'_, c64>) -> CMat {
    let scaled = Mat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * vals[j]);
    &scaled * vecs.adjoint()
}

/// Hermitian inverse square root of a positive definite matrix, with the
/// condition number of the input.
pub fn inv_sqrt(a: MatRef<'_, c64>) -> Result<(CMat, f64)> {
    let (vals, vecs) = eigh(a)?;
    let lo = vals.first().copied().unwrap_or(1.0);
    let hi = vals.last().copied().unwrap_or(1.0);
    if lo <= 0.0 {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let inv: Vec<f64> = vals.iter().map(|&x| 1.0 / x.sqrt()).collect();
    Ok((reassemble(&inv, vecs.as_ref()), hi / lo))
}

/// Columns selected from `a` in the given order.
pub fn select_columns(a: MatRef<'_, c64>, cols: &[usize]) -> CMat {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// Principal submatrix on `idx` (rows and columns).
pub fn principal(a: MatRef<'_, c64>, idx: &[usize]) -> CMat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Horizontal concatenation.
pub fn hstack(blocks: &[MatRef<'_, c64>], nrows: usize) -> CMat {
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut offset = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows);
        out.as_mut()
            .submatrix_mut(0, offset, nrows, b.ncols())
            .copy_from(*b);
        offset += b.ncols();
    }
    out
}

/// Binary (single-mode) entropy in nats; zero at the endpoints.
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    let s = term(x) + term(1.0 - x);
    if s < 1e-15 {
        0.0
    } else {
        s
    }
}

/// `exp(2 pi i n / d)` with the integer phase reduced first.
pub fn root_of_unity(n: i64, d: usize) -> c64 {
    let d_i = d as i64;
    let r = n.rem_euclid(d_i);
    let theta = 2.0 * std::f64::consts::PI * (r as f64) / (d as f64);
    c64::new(theta.cos(), theta.sin())
}
