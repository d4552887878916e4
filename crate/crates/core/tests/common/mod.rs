//! Reference implementations shared by the integration and acceptance tests.
//! Each one is deliberately simple and independent of the solver code paths
//! it checks.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use sssa_core::model::{normalize_dictionary, objective_value, Dictionary, ProblemInstance, SignalSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    let u = Uniform::new(lo, hi);
    Array2::from_shape_fn((rows, cols), |_| u.sample(rng))
}

pub fn random_dictionary(rng: &mut ChaCha8Rng, c: usize, n: usize) -> Dictionary {
    normalize_dictionary(gaussian(rng, c, n)).unwrap()
}

/// Gaussian dictionary and Gaussian signal.
pub fn random_instance(seed: u64, c: usize, n: usize, t: usize) -> ProblemInstance {
    let mut r = rng(seed);
    let dict = random_dictionary(&mut r, c, n);
    let y = SignalSet::new(gaussian(&mut r, c, t)).unwrap();
    ProblemInstance::new(dict, y).unwrap()
}

pub fn fro(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    fro(&(a - b).view()) / fro(&b.view()).max(f64::MIN_POSITIVE)
}

/// Dense `N x (T-1)` difference matrix, built entry by entry.
pub fn dense_p(t: usize) -> Array2<f64> {
    let mut p = Array2::zeros((t, t - 1));
    for k in 0..t - 1 {
        p[[k, k]] = -1.0;
        p[[k + 1, k]] = 1.0;
    }
    p
}

fn to_na(m: &ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Solves `W X + X Z = M` through the vectorized system
/// `(I_T (x) W + Z^T (x) I_N) vec(X) = vec(M)` with a dense LU factorization.
pub fn kronecker_solve(w: &ArrayView2<f64>, z: &ArrayView2<f64>, m: &ArrayView2<f64>) -> Array2<f64> {
    let (n, t) = m.dim();
    let (wn, zn) = (to_na(w), to_na(z));
    let eye_t = DMatrix::<f64>::identity(t, t);
    let eye_n = DMatrix::<f64>::identity(n, n);
    let system = eye_t.kronecker(&wn) + zn.transpose().kronecker(&eye_n);
    // column-major vec
    let rhs = DVector::from_iterator(n * t, (0..t).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| m[[i, j]]));
    let sol = system.lu().solve(&rhs).expect("nonsingular Kronecker system");
    Array2::from_shape_fn((n, t), |(i, j)| sol[j * n + i])
}

/// Split variables of the X-subproblem, all held fixed.
pub struct Subproblem<'a> {
    pub inst: &'a ProblemInstance,
    pub a: &'a Array2<f64>,
    pub b: &'a Array2<f64>,
    pub d_a: &'a Array2<f64>,
    pub d_b: &'a Array2<f64>,
    pub mu1: f64,
    pub mu2: f64,
}

impl Subproblem<'_> {
    /// `||Y - Phi X||^2 + mu1/2 ||X - A + D_A||^2 + mu2/2 ||X P - B + D_B||^2`
    pub fn value(&self, x: &Array2<f64>) -> f64 {
        let phi = self.inst.dictionary().atoms();
        let y = self.inst.signals().samples();
        let p = dense_p(x.ncols());
        let fit = y - &phi.dot(x);
        let sa = x - self.a + self.d_a;
        let sb = x.dot(&p) - self.b + self.d_b;
        let sq = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>();
        sq(&fit) + 0.5 * self.mu1 * sq(&sa) + 0.5 * self.mu2 * sq(&sb)
    }

    pub fn gradient(&self, x: &Array2<f64>) -> Array2<f64> {
        let phi = self.inst.dictionary().atoms();
        let y = self.inst.signals().samples();
        let p = dense_p(x.ncols());
        let fit = phi.t().dot(&(phi.dot(x) - y)) * 2.0;
        let sa = (x - self.a + self.d_a) * self.mu1;
        let sb = (x.dot(&p) - self.b + self.d_b).dot(&p.t()) * self.mu2;
        fit + sa + sb
    }

    /// Central differences with step `h`.
    pub fn numeric_gradient(&self, x: &Array2<f64>, h: f64) -> Array2<f64> {
        let mut g = Array2::zeros(x.dim());
        let mut probe = x.clone();
        for idx in ndarray::indices(x.dim()) {
            let orig = probe[idx];
            probe[idx] = orig + h;
            let up = self.value(&probe);
            probe[idx] = orig - h;
            let down = self.value(&probe);
            probe[idx] = orig;
            g[idx] = (up - down) / (2.0 * h);
        }
        g
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Best objective value reached by a subgradient method on the fused-LASSO
/// objective, started at `start`. Steps are Polyak steps towards a target
/// level `best - delta` (the projection onto the subgradient halfspace of that
/// level); `delta` halves whenever the iterates travel `path` without gaining
/// `delta / 2`.
pub fn subgradient_reference(
    inst: &ProblemInstance,
    lambda1: f64,
    lambda2: f64,
    iterations: usize,
    delta0: f64,
    path: f64,
    start: &Array2<f64>,
) -> f64 {
    let phi = inst.dictionary().atoms();
    let y = inst.signals().samples();
    let p = dense_p(inst.time_steps());
    let mut x = start.clone();
    let mut best = f64::INFINITY;
    let mut delta = delta0;
    let mut travelled = 0.0;
    let mut level_reset = f64::INFINITY;
    for _ in 0..iterations {
        let f = objective_value(inst, &x.view(), lambda1, lambda2).unwrap();
        best = best.min(f);
        if best <= level_reset - 0.5 * delta {
            level_reset = best;
            travelled = 0.0;
        } else if travelled > path {
            delta *= 0.5;
            travelled = 0.0;
            level_reset = best;
        }
        let mut g = phi.t().dot(&(phi.dot(&x) - y)) * 2.0;
        g.zip_mut_with(&x, |gv, &xv| *gv += lambda1 * sign(xv));
        let tv = x.dot(&p).mapv(|v| lambda2 * sign(v));
        g += &tv.dot(&p.t());
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2 == 0.0 {
            break;
        }
        let step = (f - best + delta) / gn2;
        x.scaled_add(-step, &g);
        travelled += step * gn2.sqrt();
    }
    best
}

/// Cyclic coordinate descent on `||y - Phi x||^2 + lambda ||x||_1`, one column
/// at a time, until no coordinate moves by more than `tol`.
pub fn lasso_coordinate_descent(phi: &Array2<f64>, y: &Array2<f64>, lambda: f64, tol: f64) -> Array2<f64> {
    let n = phi.ncols();
    let mut x = Array2::zeros((n, y.ncols()));
    let norms: Vec<f64> = phi.axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    for t in 0..y.ncols() {
        let mut r: Array1<f64> = y.column(t).to_owned();
        for _sweep in 0..1_000_000 {
            let mut moved: f64 = 0.0;
            for j in 0..n {
                let col = phi.column(j);
                let xj = x[[j, t]];
                let rho = col.dot(&r) + norms[j] * xj;
                // minimize norms[j] xj^2 - 2 rho xj + lambda |xj|
                let new = sign(rho) * (rho.abs() - 0.5 * lambda).max(0.0) / norms[j];
                if new != xj {
                    r.scaled_add(xj - new, &col);
                    x[[j, t]] = new;
                    moved = moved.max((new - xj).abs());
                }
            }
            if moved <= tol {
                break;
            }
        }
    }
    x
}

/// Plain (unaccelerated) proximal gradient on the row-group LASSO objective.
pub fn group_lasso_ista(phi: &Array2<f64>, y: &Array2<f64>, lambda: f64, iterations: usize) -> Array2<f64> {
    let gram = phi.t().dot(phi);
    let sigma2 = largest_eigenvalue(&gram);
    let step = 1.0 / (2.0 * sigma2);
    let mut x = Array2::<f64>::zeros((phi.ncols(), y.ncols()));
    let target = phi.t().dot(y);
    for _ in 0..iterations {
        let grad = (gram.dot(&x) - &target) * 2.0;
        let mut v = &x - &(grad * step);
        for mut row in v.axis_iter_mut(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            let scale = if norm > lambda * step { 1.0 - lambda * step / norm } else { 0.0 };
            row.mapv_inplace(|e| e * scale);
        }
        x = v;
    }
    x
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix (nalgebra).
pub fn largest_eigenvalue(s: &Array2<f64>) -> f64 {
    to_na(&s.view())
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Least-squares residual norm of `Y` on the columns `support` of `phi`.
pub fn support_residual(phi: &Array2<f64>, y: &Array2<f64>, support: &[usize]) -> f64 {
    let sub = to_na(&phi.select(Axis(1), support).view());
    let rhs = to_na(&y.view());
    let coef = sub.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
    (rhs - sub * coef).norm()
}

/// Exhaustive best pair of atoms for `Y` (joint residual).
pub fn best_pair(phi: &Array2<f64>, y: &Array2<f64>) -> (usize, usize) {
    let n = phi.ncols();
    let mut best = (f64::INFINITY, (0, 0));
    for i in 0..n {
        for j in i + 1..n {
            let r = support_residual(phi, y, &[i, j]);
            if r < best.0 {
                best = (r, (i, j));
            }
        }
    }
    best.1
}
