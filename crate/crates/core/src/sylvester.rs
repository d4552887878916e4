//! Symmetric eigendecomposition and the diagonalization-based solver for
//! `W X + X Z = M` with symmetric `W` (positive definite) and `Z` (positive
//! semidefinite).
//!
//! With `W = F Dw F^T` and `Z = G Dz G^T`, the equation decouples in the
//! rotated basis `X' = F^T X G` into `(Dw(n) + Dz(t)) X'(n, t) = M'(n, t)`.
//! Both decompositions and the table of reciprocals are computed once and
//! reused for every right-hand side.

use ndarray::{Array1, Array2, ArrayView2, Zip};

use crate::error::{check_dim, Result, SssaError};

/// Eigenvalues below this (in absolute value) are treated as rounding noise
/// when checking a positive semidefinite input.
const PSD_CLAMP: f64 = 1e-10;
const PD_RELATIVE_FLOOR: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;

/// `S = Q diag(d) Q^T` with orthogonal `Q` and ascending `d`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub vectors: Array2<f64>,
    pub values: Array1<f64>,
}

/// Eigendecomposition of a real symmetric matrix by Householder
/// tridiagonalization followed by the implicit QL iteration.
///
/// The input is symmetrized as `(S + S^T) / 2` before factorization.
pub fn sym_eig(s: &ArrayView2<f64>) -> Result<SymEig> {
    let (rows, cols) = s.dim();
    if rows != cols {
        return Err(SssaError::NotSquare { rows, cols });
    }
    if !s.iter().all(|v| v.is_finite()) {
        return Err(SssaError::NonFinite("symmetric eigendecomposition input"));
    }
    let n = rows;
    if n == 0 {
        return Ok(SymEig {
            vectors: Array2::zeros((0, 0)),
            values: Array1::zeros(0),
        });
    }
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (s[[i, j]] + s[[j, i]]));
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = Array1::from_iter(order.iter().map(|&k| d[k]));
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| v[[i, order[j]]]);
    Ok(SymEig { vectors, values })
}

// Householder reduction to tridiagonal form (EISPACK tred2). On exit `v`
// holds the accumulated orthogonal transform, `d` the diagonal and `e` the
// subdiagonal in e[1..n].
fn tridiagonalize(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in j + 1..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iteration on the symmetric tridiagonal matrix (EISPACK tql2),
// accumulating rotations into `v`.
fn ql_implicit(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let max_sweeps = 60 * n.max(1);
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(SssaError::NonFinite("symmetric eigendecomposition (no convergence)"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[[k, i + 1]];
                        let vk = v[[k, i]];
                        v[[k, i + 1]] = s * vk + c * vk1;
                        v[[k, i]] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Precomputed diagonalizations of `W` and `Z` plus the reciprocal table
/// `r(n, t) = 1 / (Dw(n) + Dz(t))`.
#[derive(Debug, Clone)]
pub struct SylvesterFactors {
    f: Array2<f64>,
    d_w: Array1<f64>,
    g: Array2<f64>,
    d_z: Array1<f64>,
    inv_diag: Array2<f64>,
}

impl SylvesterFactors {
    pub fn left_vectors(&self) -> &Array2<f64> {
        &self.f
    }

    pub fn left_values(&self) -> &Array1<f64> {
        &self.d_w
    }

    pub fn right_vectors(&self) -> &Array2<f64> {
        &self.g
    }

    pub fn right_values(&self) -> &Array1<f64> {
        &self.d_z
    }

    pub fn reciprocals(&self) -> &Array2<f64> {
        &self.inv_diag
    }

    /// `(N, T)`: the shape of right-hand sides accepted by [`solve_sylvester`].
    pub fn shape(&self) -> (usize, usize) {
        self.inv_diag.dim()
    }
}

fn check_symmetric(m: &ArrayView2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(SssaError::NotSquare { rows, cols });
    }
    let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let asym: f64 = m
        .indexed_iter()
        .map(|((i, j), v)| (v - m[[j, i]]).powi(2))
        .sum::<f64>()
        .sqrt();
    if asym > SYMMETRY_TOL * scale {
        return Err(SssaError::InvalidConfig(format!(
            "matrix is not symmetric (asymmetry {asym:e}, norm {scale:e})"
        )));
    }
    Ok(())
}

/// Diagonalizes `W` (`N x N`, positive definite) and `Z` (`T x T`, positive
/// semidefinite) and tabulates the per-entry reciprocals.
pub fn precompute_factors(w: &ArrayView2<f64>, z: &ArrayView2<f64>) -> Result<SylvesterFactors> {
    check_symmetric(w)?;
    check_symmetric(z)?;
    let we = sym_eig(w)?;
    let ze = sym_eig(z)?;

    let w_min = we.values.first().copied().unwrap_or(0.0);
    let w_max = we.values.last().copied().unwrap_or(0.0);
    if !(w_min > 0.0 && w_min > PD_RELATIVE_FLOOR * w_max) {
        return Err(SssaError::NotPositiveDefinite {
            min: w_min,
            max: w_max,
        });
    }

    let mut d_z = ze.values;
    let z_min = d_z.first().copied().unwrap_or(0.0);
    if z_min < -PSD_CLAMP {
        return Err(SssaError::NotPositiveDefinite {
            min: z_min,
            max: d_z.last().copied().unwrap_or(0.0),
        });
    }
    d_z.mapv_inplace(|v| v.max(0.0));

    let inv_diag = Array2::from_shape_fn((we.values.len(), d_z.len()), |(n, t)| {
        1.0 / (we.values[n] + d_z[t])
    });
    Ok(SylvesterFactors {
        f: we.vectors,
        d_w: we.values,
        g: ze.vectors,
        d_z,
        inv_diag,
    })
}

/// Solves `W X + X Z = M` using precomputed factors: `X = F ((F^T M G) .* r) G^T`.
pub fn solve_sylvester(factors: &SylvesterFactors, m: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, t) = factors.shape();
    check_dim("rows of M vs N", m.nrows(), n)?;
    check_dim("columns of M vs T", m.ncols(), t)?;
    let mut rotated = factors.f.t().dot(m).dot(&factors.g);
    Zip::from(&mut rotated)
        .and(&factors.inv_diag)
        .for_each(|x, &r| *x *= r);
    Ok(factors.f.dot(&rotated).dot(&factors.g.t()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_difference_operator;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let a = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        &a + &a.t()
    }

    fn fro(m: &Array2<f64>) -> f64 {
        m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn check_decomposition(s: &Array2<f64>) {
        let n = s.nrows();
        let eig = sym_eig(&s.view()).unwrap();
        let q = &eig.vectors;
        let orth = q.t().dot(q) - Array2::<f64>::eye(n);
        assert!(fro(&orth) <= 1e-10 * n as f64, "orthogonality {}", fro(&orth));
        let recon = q.dot(&Array2::from_diag(&eig.values)).dot(&q.t()) - s;
        assert!(fro(&recon) <= 1e-9 * fro(s).max(f64::MIN_POSITIVE), "recon {}", fro(&recon));
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn diagonal_input() {
        let eig = sym_eig(&array![[2.0, 0.0], [0.0, 3.0]].view()).unwrap();
        assert_eq!(eig.values.to_vec(), vec![2.0, 3.0]);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(eig.vectors[[i, j]].abs(), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn exchange_matrix() {
        let eig = sym_eig(&array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [1, 2, 3, 6, 13, 40] {
            check_decomposition(&random_symmetric(&mut rng, n));
        }
    }

    #[test]
    fn path_laplacian_of_length_300() {
        let p = build_difference_operator(300).unwrap();
        check_decomposition(&p.gram());
    }

    #[test]
    fn repeated_and_zero_eigenvalues() {
        check_decomposition(&Array2::<f64>::eye(5));
        check_decomposition(&Array2::<f64>::zeros((4, 4)));
        check_decomposition(&Array2::<f64>::ones((6, 6)));
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(matches!(
            sym_eig(&Array2::<f64>::zeros((2, 3)).view()),
            Err(SssaError::NotSquare { rows: 2, cols: 3 })
        ));
        let bad = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(matches!(sym_eig(&bad.view()), Err(SssaError::NonFinite(_))));
    }

    #[test]
    fn scaled_identity_factors() {
        let mu1 = 0.5;
        let w = Array2::<f64>::eye(4) * (2.0 + mu1);
        let z = Array2::<f64>::zeros((3, 3));
        let f = precompute_factors(&w.view(), &z.view()).unwrap();
        assert!(f.left_values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
        assert!(f.right_values().iter().all(|&v| v == 0.0));
        assert!(f.reciprocals().iter().all(|&r| (r - 1.0 / 2.5).abs() < 1e-14));
    }

    #[test]
    fn chain_of_three_eigenvalues() {
        // Dense oracle: characteristic polynomial of [[1,-1,0],[-1,2,-1],[0,-1,1]]
        // is -l (l - 1) (l - 3).
        let z = build_difference_operator(3).unwrap().gram();
        let w = Array2::<f64>::eye(2);
        let f = precompute_factors(&w.view(), &z.view()).unwrap();
        let d = f.right_values();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_w_is_rejected() {
        // rank-deficient Phi^T Phi with mu1 = 0
        let phi = array![[1.0, 1.0], [0.0, 0.0]];
        let w = phi.t().dot(&phi) * 2.0;
        let z = Array2::<f64>::zeros((3, 3));
        assert!(matches!(
            precompute_factors(&w.view(), &z.view()),
            Err(SssaError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn indefinite_z_is_rejected() {
        let w = Array2::<f64>::eye(2);
        let z = array![[-1.0, 0.0], [0.0, 1.0]];
        assert!(precompute_factors(&w.view(), &z.view()).is_err());
    }

    #[test]
    fn scalar_equation() {
        let f = precompute_factors(&array![[2.0]].view(), &array![[3.0]].view()).unwrap();
        let x = solve_sylvester(&f, &array![[10.0]].view()).unwrap();
        assert_abs_diff_eq!(x[[0, 0]], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_z_is_a_plain_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-1.0..1.0));
        let w = a.t().dot(&a) + Array2::<f64>::eye(5);
        let m = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
        let f = precompute_factors(&w.view(), &Array2::<f64>::zeros((4, 4)).view()).unwrap();
        let x = solve_sylvester(&f, &m.view()).unwrap();

        let wn = nalgebra::DMatrix::from_fn(5, 5, |i, j| w[[i, j]]);
        let mn = nalgebra::DMatrix::from_fn(5, 4, |i, j| m[[i, j]]);
        let direct = wn.lu().solve(&mn).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                assert_abs_diff_eq!(x[[i, j]], direct[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn wrong_rhs_shape() {
        let f = precompute_factors(&Array2::<f64>::eye(2).view(), &Array2::<f64>::eye(3).view())
            .unwrap();
        assert!(matches!(
            solve_sylvester(&f, &Array2::<f64>::zeros((3, 2)).view()),
            Err(SssaError::DimensionMismatch { .. })
        ));
    }

    fn random_problem(seed: u64, n: usize, t: usize) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rng.gen_range(1..=n);
        let phi = Array2::from_shape_fn((c, n), |_| rng.gen_range(-1.0..1.0));
        let mu1 = rng.gen_range(0.1..10.0);
        let mu2 = rng.gen_range(0.1..10.0);
        let w = phi.t().dot(&phi) * 2.0 + Array2::<f64>::eye(n) * mu1;
        let z = build_difference_operator(t).unwrap().gram() * mu2;
        (w, z)
    }

    proptest! {
        #[test]
        fn residual_is_small(seed in any::<u64>(), n in 1usize..=12, t in 2usize..=10) {
            let (w, z) = random_problem(seed, n, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let m = Array2::from_shape_fn((n, t), |_| rng.gen_range(-5.0..5.0));
            let f = precompute_factors(&w.view(), &z.view()).unwrap();
            let x = solve_sylvester(&f, &m.view()).unwrap();
            let res = w.dot(&x) + x.dot(&z) - &m;
            prop_assert!(fro(&res) <= 1e-8 * fro(&m));
        }

        #[test]
        fn solve_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let (w, z) = random_problem(seed, 7, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let m1 = Array2::from_shape_fn((7, 6), |_| rng.gen_range(-1.0..1.0));
            let m2 = Array2::from_shape_fn((7, 6), |_| rng.gen_range(-1.0..1.0));
            let f = precompute_factors(&w.view(), &z.view()).unwrap();
            let combined = solve_sylvester(&f, &(&m1 * alpha + &m2 * beta).view()).unwrap();
            let separate = solve_sylvester(&f, &m1.view()).unwrap() * alpha
                + solve_sylvester(&f, &m2.view()).unwrap() * beta;
            prop_assert!(fro(&(&combined - &separate)) <= 1e-9 * fro(&separate).max(1e-300));
        }
    }
}
