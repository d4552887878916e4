//! Split Bregman solver for the multi-channel fused-LASSO problem.
//!
//! The problem is split with `A = X` and `B = X P`. Each outer iteration
//! runs `k_max` sweeps of
//!
//! 1. `X <- argmin ||Y - Phi X||^2 + mu1/2 ||X - A + D_A||^2 + mu2/2 ||X P - B + D_B||^2`,
//!    a Sylvester equation `W X + X Z = M` with `W = 2 Phi^T Phi + mu1 I` and
//!    `Z = mu2 P P^T`;
//! 2. `A <- shrink(X + D_A, lambda1 / mu1)`;
//! 3. `B <- shrink(X P + D_B, lambda2 / mu2)`;
//!
//! followed by the Bregman updates `D_A += X - A`, `D_B += X P - B`. The
//! loop stops once `||X_i - X_{i-1}|| / ||X_i||` drops below `eps`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SssaError};
use crate::model::{
    ensure_finite, frobenius, objective_value, relative_change, CoefficientMatrix,
    DifferenceOperator, ProblemInstance,
};
use crate::sylvester::{precompute_factors, solve_sylvester, SylvesterFactors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the entrywise l1 penalty.
    pub lambda1: f64,
    /// Weight of the total-variation penalty.
    pub lambda2: f64,
    /// Penalty on the `A = X` constraint.
    pub mu1: f64,
    /// Penalty on the `B = X P` constraint.
    pub mu2: f64,
    /// Relative-change stopping tolerance.
    pub eps: f64,
    pub iter_max: usize,
    /// Inner sweeps per outer iteration.
    pub k_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 0.1,
            mu1: 1.0,
            mu2: 1.0,
            eps: 1e-5,
            iter_max: 500,
            k_max: 1,
        }
    }
}

impl SolverConfig {
    pub fn with_lambdas(lambda1: f64, lambda2: f64) -> Self {
        Self {
            lambda1,
            lambda2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SssaError::InvalidConfig(msg));
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be a nonnegative number, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return bad(format!("lambda2 must be a nonnegative number, got {}", self.lambda2));
        }
        if !(self.mu1 > 0.0 && self.mu1.is_finite()) {
            return bad(format!("mu1 must be positive, got {}", self.mu1));
        }
        if !(self.mu2 > 0.0 && self.mu2.is_finite()) {
            return bad(format!("mu2 must be positive, got {}", self.mu2));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.iter_max == 0 {
            return bad("iter_max must be at least 1".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1".into());
        }
        Ok(())
    }
}

/// Primal, split and dual variables of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: CoefficientMatrix,
    pub a: CoefficientMatrix,
    /// `N x (T-1)`
    pub b: Array2<f64>,
    pub d_a: CoefficientMatrix,
    /// `N x (T-1)`
    pub d_b: Array2<f64>,
    pub iteration: usize,
    pub last_change: f64,
}

impl SolverState {
    /// `A = X0`, `B = X0 P`, zero duals.
    pub fn initial(x0: CoefficientMatrix, p: &DifferenceOperator) -> Result<Self> {
        let b = p.apply(&x0.view())?;
        let (n, t) = x0.dim();
        Ok(Self {
            a: x0.clone(),
            d_a: Array2::zeros((n, t)),
            d_b: Array2::zeros(b.dim()),
            b,
            x: x0,
            iteration: 0,
            last_change: f64::INFINITY,
        })
    }

    fn ensure_finite(&self) -> Result<()> {
        ensure_finite(&self.x.view(), "solver state X")?;
        ensure_finite(&self.a.view(), "solver state A")?;
        ensure_finite(&self.b.view(), "solver state B")?;
        ensure_finite(&self.d_a.view(), "solver state D_A")?;
        ensure_finite(&self.d_b.view(), "solver state D_B")
    }
}

/// Quantities that stay fixed for the whole solve.
#[derive(Debug, Clone)]
pub struct SolverCache {
    pub factors: SylvesterFactors,
    /// `Phi^T Y`
    pub phi_t_y: Array2<f64>,
    pub structure: DifferenceOperator,
}

impl SolverCache {
    pub fn new(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        let phi = inst.dictionary().atoms();
        let n = phi.ncols();
        let mut w = phi.t().dot(phi) * 2.0;
        for i in 0..n {
            w[[i, i]] += cfg.mu1;
        }
        let z = inst.structure().gram() * cfg.mu2;
        let factors = precompute_factors(&w.view(), &z.view())?;
        Ok(Self {
            factors,
            phi_t_y: phi.t().dot(inst.signals().samples()),
            structure: inst.structure().clone(),
        })
    }
}

/// Entrywise `sign(v) max(|v| - kappa, 0)`, the minimizer of
/// `kappa ||A||_1 + 1/2 ||A - V||^2`.
pub fn soft_threshold(v: &ArrayView2<f64>, kappa: f64) -> Result<Array2<f64>> {
    if !(kappa >= 0.0) {
        return Err(SssaError::NegativeThreshold(kappa));
    }
    Ok(v.mapv(|x| shrink(x, kappa)))
}

#[inline]
fn shrink(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// Right-hand side `2 Phi^T Y - mu1 (D_A - A) - mu2 (D_B - B) P^T` of the
/// X-subproblem's stationarity condition.
pub fn x_update_rhs(
    state: &SolverState,
    cache: &SolverCache,
    cfg: &SolverConfig,
) -> Result<Array2<f64>> {
    check_dim("rows of A vs N", state.a.nrows(), cache.phi_t_y.nrows())?;
    check_dim("columns of A vs T", state.a.ncols(), cache.phi_t_y.ncols())?;
    check_dim("shape of D_A vs A", state.d_a.len(), state.a.len())?;
    check_dim("shape of D_B vs B", state.d_b.len(), state.b.len())?;
    let bd = &state.d_b - &state.b;
    let coupled = cache.structure.apply_transpose(&bd.view())?;
    let mut m = &cache.phi_t_y * 2.0;
    m.zip_mut_with(&state.d_a, |mv, &d| *mv -= cfg.mu1 * d);
    m.zip_mut_with(&state.a, |mv, &a| *mv += cfg.mu1 * a);
    m.zip_mut_with(&coupled, |mv, &c| *mv -= cfg.mu2 * c);
    Ok(m)
}

/// Exact minimizer of the X-subproblem for the current split and dual variables.
pub fn x_update(
    state: &SolverState,
    cache: &SolverCache,
    cfg: &SolverConfig,
) -> Result<CoefficientMatrix> {
    let m = x_update_rhs(state, cache, cfg)?;
    solve_sylvester(&cache.factors, &m.view())
}

/// `k_max` rounds of X, A and B updates with the duals held fixed.
pub fn inner_sweep(
    mut state: SolverState,
    cache: &SolverCache,
    cfg: &SolverConfig,
) -> Result<SolverState> {
    let kappa_a = cfg.lambda1 / cfg.mu1;
    let kappa_b = cfg.lambda2 / cfg.mu2;
    for _ in 0..cfg.k_max {
        state.x = x_update(&state, cache, cfg)?;
        state.a = soft_threshold(&(&state.x + &state.d_a).view(), kappa_a)?;
        let xp = cache.structure.apply(&state.x.view())?;
        state.b = soft_threshold(&(&xp + &state.d_b).view(), kappa_b)?;
    }
    Ok(state)
}

/// Bregman step: `D_A += X - A`, `D_B += X P - B`.
pub fn dual_update(mut state: SolverState, p: &DifferenceOperator) -> Result<SolverState> {
    let xp = p.apply(&state.x.view())?;
    state.d_a += &state.x;
    state.d_a -= &state.a;
    state.d_b += &xp;
    state.d_b -= &state.b;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub x: CoefficientMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// `||X - A||_F` at exit.
    pub residual_a: f64,
    /// `||X P - B||_F` at exit.
    pub residual_b: f64,
    /// Final split variables and duals, kept for diagnostics.
    #[serde(skip)]
    pub final_state: SolverState,
}

/// Runs the split Bregman iteration from `x0` (zeros when `None`).
pub fn multi_sssa_solve(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    x0: Option<&CoefficientMatrix>,
) -> Result<Solution> {
    cfg.validate()?;
    let x0 = match x0 {
        Some(x) => {
            inst.check_coefficients(&x.view())?;
            ensure_finite(&x.view(), "initial X")?;
            x.clone()
        }
        None => Array2::zeros((inst.n_atoms(), inst.time_steps())),
    };
    let cache = SolverCache::new(inst, cfg)?;
    let mut state = SolverState::initial(x0, &cache.structure)?;
    let mut trace = Vec::with_capacity(cfg.iter_max.min(4096));
    let mut converged = false;

    while state.iteration < cfg.iter_max {
        let previous = state.x.clone();
        state = inner_sweep(state, &cache, cfg)?;
        state = dual_update(state, &cache.structure)?;
        state.ensure_finite()?;
        state.iteration += 1;
        state.last_change = relative_change(&state.x.view(), &previous.view())?;
        trace.push(objective_value(inst, &state.x.view(), cfg.lambda1, cfg.lambda2)?);
        if state.last_change < cfg.eps {
            converged = true;
            break;
        }
    }
    log::debug!(
        "split bregman: {} iterations, converged={converged}, last change {:e}",
        state.iteration,
        state.last_change
    );

    let residual_a = frobenius(&(&state.x - &state.a).view());
    let xp = cache.structure.apply(&state.x.view())?;
    let residual_b = frobenius(&(&xp - &state.b).view());
    Ok(Solution {
        x: state.x.clone(),
        iterations: state.iteration,
        converged,
        objective_trace: trace,
        residual_a,
        residual_b,
        final_state: state,
    })
}
