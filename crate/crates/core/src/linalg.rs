//! Small dense helpers: Householder least squares and the spectral norm.

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Relative size below which a diagonal entry of `R` marks a rank-deficient system.
const RANK_TOL: f64 = 1e-12;

/// Solves `min ||A c - B||_F` for a tall, full-column-rank `A` (`m x k`,
/// `m >= k`) with Householder QR. Returns `None` when `A` is
/// rank-deficient or wide.
pub fn least_squares(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let (m, k) = a.dim();
    assert_eq!(m, b.nrows(), "least_squares: row mismatch");
    if k > m {
        return None;
    }
    if k == 0 {
        return Some(Array2::zeros((0, b.ncols())));
    }
    let mut r = a.to_owned();
    let mut qtb = b.to_owned();
    let scale = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    for j in 0..k {
        let mut col = r.slice(ndarray::s![j.., j]).to_owned();
        let alpha = col.dot(&col).sqrt();
        if alpha <= RANK_TOL * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        let sign = if col[0] >= 0.0 { 1.0 } else { -1.0 };
        col[0] += sign * alpha;
        let vnorm_sq = col.dot(&col);
        // reflect remaining columns of R and all of Q^T B
        for jj in j..k {
            let mut target = r.slice_mut(ndarray::s![j.., jj]);
            let proj = 2.0 * col.dot(&target) / vnorm_sq;
            target.scaled_add(-proj, &col);
        }
        for c in 0..qtb.ncols() {
            let mut target = qtb.slice_mut(ndarray::s![j.., c]);
            let proj = 2.0 * col.dot(&target) / vnorm_sq;
            target.scaled_add(-proj, &col);
        }
    }

    let diag_max = (0..k).map(|j| r[[j, j]].abs()).fold(0.0f64, f64::max);
    if (0..k).any(|j| r[[j, j]].abs() <= RANK_TOL * diag_max) {
        return None;
    }

    // back substitution on the leading k x k block
    let mut x = Array2::zeros((k, b.ncols()));
    for c in 0..b.ncols() {
        for i in (0..k).rev() {
            let mut s = qtb[[i, c]];
            for jj in i + 1..k {
                s -= r[[i, jj]] * x[[jj, c]];
            }
            x[[i, c]] = s / r[[i, i]];
        }
    }
    Some(x)
}

/// Columns of `m` at the given indices.
pub fn select_columns(m: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(1), idx)
}

/// Largest singular value of `a` by power iteration on `A^T A`, stopping
/// when the eigenvalue estimate changes by less than `rel_tol` relative.
pub fn spectral_norm(a: &ArrayView2<f64>, rel_tol: f64, max_iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // a deterministic start that is not orthogonal to any coordinate axis
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
    v /= v.dot(&v).sqrt();
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let av = a.dot(&v);
        let mut w = a.t().dot(&av);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        w /= norm;
        v = w;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0).sqrt()
}
