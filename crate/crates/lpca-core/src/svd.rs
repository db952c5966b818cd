//! Dense SVD helpers shared by the penalty and solver modules.

use faer::linalg::solvers::Svd;
use faer::Mat;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Thin SVD `a = u * diag(s) * v^T` with `s` sorted nonincreasing.
pub(crate) struct ThinSvd {
    /// I x K orthonormal columns, K = min(I, J).
    pub u: Array2<f64>,
    /// K singular values, nonincreasing.
    pub s: Array1<f64>,
    /// J x K orthonormal columns (not transposed).
    pub v: Array2<f64>,
}

pub(crate) fn thin_svd(a: &ArrayView2<f64>) -> Result<ThinSvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "matrix contains non-finite entries".into(),
        ));
    }
    let m = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]]);
    let svd = Svd::new_thin(m.as_ref()).map_err(|e| Error::Svd(format!("{e:?}")))?;
    let k = svd.S().dim();
    let u = Array2::from_shape_fn((a.nrows(), k), |(i, j)| svd.U()[(i, j)]);
    let v = Array2::from_shape_fn((a.ncols(), k), |(i, j)| svd.V()[(i, j)]);
    let s = Array1::from_shape_fn(k, |i| svd.S()[i]);
    Ok(ThinSvd { u, s, v })
}

/// Singular values only.
pub(crate) fn singular_values(a: &ArrayView2<f64>) -> Result<Array1<f64>> {
    thin_svd(a).map(|svd| svd.s)
}

/// `u[:, ..k] * diag(s[..k]) * v[:, ..k]^T`.
pub(crate) fn reconstruct(u: &Array2<f64>, s: &[f64], v: &Array2<f64>, k: usize) -> Array2<f64> {
    let (rows, cols) = (u.nrows(), v.nrows());
    if k == 0 {
        return Array2::zeros((rows, cols));
    }
    let mut us = u.slice(ndarray::s![.., ..k]).to_owned();
    for (mut col, &sv) in us.columns_mut().into_iter().zip(s.iter().take(k)) {
        col *= sv;
    }
    us.dot(&v.slice(ndarray::s![.., ..k]).t())
}

/// Best rank-`rank` approximation in Frobenius norm.
pub(crate) fn truncated_rank_approx(a: &ArrayView2<f64>, rank: usize) -> Result<Array2<f64>> {
    let svd = thin_svd(a)?;
    let k = rank.min(svd.s.len());
    Ok(reconstruct(&svd.u, svd.s.as_slice().unwrap(), &svd.v, k))
}

/// Column means and the column-centered matrix.
pub(crate) fn center_columns(a: &ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let means = a
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(a.ncols()));
    let centered = a - &means;
    (means, centered)
}

/// Resolve the SVD sign ambiguity: the largest-magnitude entry of every
/// left singular vector is made positive. `v` is flipped in tandem so the
/// product is unchanged.
pub(crate) fn fix_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    for r in 0..u.ncols() {
        let col = u.column(r);
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if u[[best, r]] < 0.0 {
            u.column_mut(r).mapv_inplace(|x| -x);
            v.column_mut(r).mapv_inplace(|x| -x);
        }
    }
}
