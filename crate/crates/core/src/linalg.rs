//! Thin wrappers over LAPACK (through ndarray-linalg) plus frame changes.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eig, EigVals, Factorize, Inverse, Solve, SVD};

use crate::{CMat, Error, RMat, Result, C64};

pub fn to_complex(a: &RMat) -> CMat {
    a.mapv(C64::from)
}

pub fn eig(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let (vals, vecs) = a.eig().map_err(|e| Error::Linalg(format!("eigensolver failed: {e}")))?;
    Ok((vals.to_vec(), vecs))
}

pub fn eigvals(a: &CMat) -> Result<Vec<C64>> {
    let vals = a.eigvals().map_err(|e| Error::Linalg(format!("eigensolver failed: {e}")))?;
    Ok(vals.to_vec())
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let (_, s, _) = a.svd(false, false).map_err(|e| Error::Linalg(format!("svd failed: {e}")))?;
    Ok(s.to_vec())
}

/// Spectral norm.
pub fn norm2(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn inv(a: &CMat) -> Result<CMat> {
    a.inv().map_err(|e| Error::Linalg(format!("inversion failed: {e}")))
}

/// W^{1/2} A W^{-1/2}: the matrix in coordinates where the quadrature inner
/// product is Euclidean.
pub fn to_weighted(a: &CMat, w: &Array1<f64>) -> CMat {
    let s = w.mapv(f64::sqrt);
    let mut b = a.clone();
    for ((i, j), v) in b.indexed_iter_mut() {
        *v *= s[i] / s[j];
    }
    b
}

pub fn from_weighted(b: &CMat, w: &Array1<f64>) -> CMat {
    let s = w.mapv(f64::sqrt);
    let mut a = b.clone();
    for ((i, j), v) in a.indexed_iter_mut() {
        *v *= s[j] / s[i];
    }
    a
}

/// Smallest singular value of `a` by inverse iteration on (AᴴA)⁻¹ with one LU.
pub fn sigma_min_inverse_iteration(a: &CMat, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.nrows();
    let lu = a.factorize().map_err(|e| Error::Linalg(format!("LU failed: {e}")))?;
    // deterministic start with all modes present
    let mut x: Array1<C64> = Array1::from_shape_fn(n, |i| C64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
    let nx = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    x.mapv_inplace(|v| v / nx);
    let mut est = 0.0;
    for _ in 0..max_iter {
        let y = lu.solve_h(&x).map_err(|e| Error::Linalg(e.to_string()))?;
        let z = lu.solve(&y).map_err(|e| Error::Linalg(e.to_string()))?;
        let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let nz = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        // ‖A^{-H} x‖² is the Rayleigh quotient of (AAᴴ)⁻¹ at x
        let new = ny;
        x = z.mapv(|v| v / nz);
        if (new - est).abs() <= tol * new {
            est = new;
            break;
        }
        est = new;
    }
    Ok(1.0 / est.sqrt())
}

/// Column-stacked identity of size n.
pub fn eye(n: usize) -> CMat {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// diag(d) · A
pub fn scale_rows(a: &mut CMat, d: &[C64]) {
    for (mut row, &s) in a.axis_iter_mut(Axis(0)).zip(d) {
        row.mapv_inplace(|v| v * s);
    }
}

/// A · diag(d)
pub fn scale_cols(a: &mut CMat, d: &[C64]) {
    for (mut col, &s) in a.axis_iter_mut(Axis(1)).zip(d) {
        col.mapv_inplace(|v| v * s);
    }
}

pub fn add_diag(a: &mut CMat, d: impl IntoIterator<Item = C64>) {
    for (i, v) in d.into_iter().enumerate() {
        a[[i, i]] += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_iteration_matches_svd() {
        let n = 30;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            C64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64) + if i == j { C64::new(0.3, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let s = singular_values(&a).unwrap();
        let smin = *s.last().unwrap();
        let it = sigma_min_inverse_iteration(&a, 1e-14, 500).unwrap();
        assert!((it - smin).abs() < 1e-8 * s[0], "{it} vs {smin}");
    }
}
