//! Small dense linear-algebra helpers shared across modules.
//!
//! Dense factorizations are delegated to nalgebra; data elsewhere in the
//! crate lives in `ndarray` arrays, so these helpers convert at the
//! boundary. Sizes here are small (masks up to a few hundred per side for
//! the dense path, factors with at most a dozen columns), so the copies are
//! irrelevant.

use nalgebra::DMatrix;
use ndarray::Array2;

pub(crate) fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Singular values in decreasing order.
pub fn singular_values(a: &Array2<f64>) -> Vec<f64> {
    let svd = to_nalgebra(a).svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn frobenius_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Full thin SVD, singular values in decreasing order.
///
/// Returns `(u, s, v)` with `a = u * diag(s) * v^T`; `u` is m x k and `v`
/// is n x k for k = min(m, n).
pub fn svd(a: &Array2<f64>) -> (Array2<f64>, Vec<f64>, Array2<f64>) {
    let m = a.nrows();
    let n = a.ncols();
    let k = m.min(n);
    let svd = to_nalgebra(a).svd(true, true);
    let u_na = svd.u.expect("svd requested u");
    let vt_na = svd.v_t.expect("svd requested v_t");
    let s_na = svd.singular_values;

    // nalgebra does not guarantee ordering; sort triples by singular value.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s_na[j].partial_cmp(&s_na[i]).unwrap());

    let mut u = Array2::zeros((m, k));
    let mut v = Array2::zeros((n, k));
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        s.push(s_na[src]);
        for i in 0..m {
            u[[i, dst]] = u_na[(i, src)];
        }
        for j in 0..n {
            v[[j, dst]] = vt_na[(src, j)];
        }
    }
    (u, s, v)
}
