use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SssaError};
use crate::linalg::spectral_norm;
use crate::model::{frobenius_sq, l1_norm, Dictionary, SignalSet};

const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop when the relative objective change falls to this value.
    pub rel_tol: f64,
    /// Gradient step; `None` selects `1 / (2 sigma_max(Phi)^2)`.
    #[serde(default)]
    pub step: Option<f64>,
}

impl ProxConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_iters: 5000,
            rel_tol: 1e-9,
            step: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SssaError::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.max_iters == 0 {
            return Err(SssaError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(SssaError::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(SssaError::InvalidConfig(format!("step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

/// `||Y - Phi X||^2 + lambda ||X||_1`
pub fn lasso_objective(y: &SignalSet, dict: &Dictionary, x: &ArrayView2<f64>, lambda: f64) -> f64 {
    fit(y, dict, x) + lambda * l1_norm(x)
}

/// `||Y - Phi X||^2 + lambda sum_n ||X(n, :)||_2`
pub fn group_lasso_objective(
    y: &SignalSet,
    dict: &Dictionary,
    x: &ArrayView2<f64>,
    lambda: f64,
) -> f64 {
    fit(y, dict, x) + lambda * row_norms(x).iter().sum::<f64>()
}

fn fit(y: &SignalSet, dict: &Dictionary, x: &ArrayView2<f64>) -> f64 {
    let r = y.samples() - &dict.atoms().dot(x);
    frobenius_sq(&r.view())
}

fn row_norms(x: &ArrayView2<f64>) -> Vec<f64> {
    x.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect()
}

/// FISTA on the LASSO objective; columns are independent but share one
/// step and stopping rule.
pub fn fista_lasso(y: &SignalSet, dict: &Dictionary, cfg: &ProxConfig) -> Result<Array2<f64>> {
    fista(y, dict, cfg, Penalty::L1)
}

/// FISTA on the row-group LASSO objective (one group per atom, spanning all
/// time steps).
pub fn fista_group_lasso(
    y: &SignalSet,
    dict: &Dictionary,
    cfg: &ProxConfig,
) -> Result<Array2<f64>> {
    fista(y, dict, cfg, Penalty::Rows)
}

#[derive(Clone, Copy)]
enum Penalty {
    L1,
    Rows,
}

impl Penalty {
    fn value(self, y: &SignalSet, dict: &Dictionary, x: &ArrayView2<f64>, lambda: f64) -> f64 {
        match self {
            Penalty::L1 => lasso_objective(y, dict, x, lambda),
            Penalty::Rows => group_lasso_objective(y, dict, x, lambda),
        }
    }

    fn prox(self, v: &mut Array2<f64>, kappa: f64) {
        match self {
            Penalty::L1 => v.mapv_inplace(|x| x.signum() * (x.abs() - kappa).max(0.0)),
            Penalty::Rows => {
                for mut row in v.axis_iter_mut(Axis(0)) {
                    let norm = row.dot(&row).sqrt();
                    let scale = if norm > kappa { 1.0 - kappa / norm } else { 0.0 };
                    row.mapv_inplace(|x| x * scale);
                }
            }
        }
    }
}

fn fista(y: &SignalSet, dict: &Dictionary, cfg: &ProxConfig, penalty: Penalty) -> Result<Array2<f64>> {
    cfg.validate()?;
    check_dim("signal channels vs dictionary channels", y.channels(), dict.channels())?;
    let phi = dict.atoms();
    let (n, t) = (dict.n_atoms(), y.len());

    let step = match cfg.step {
        Some(s) => s,
        None => {
            let sigma = spectral_norm(&phi.view(), POWER_ITER_TOL, POWER_ITER_MAX);
            if sigma == 0.0 {
                return Ok(Array2::zeros((n, t)));
            }
            1.0 / (2.0 * sigma * sigma)
        }
    };
    let kappa = cfg.lambda * step;
    // gradient of the fit is 2 Phi^T (Phi X - Y); precompute the constant parts
    let gram2 = phi.t().dot(phi) * (2.0 * step);
    let target = phi.t().dot(y.samples()) * (2.0 * step);

    let mut x = Array2::<f64>::zeros((n, t));
    let mut momentum_point = x.clone();
    let mut theta = 1.0f64;
    let mut objective = penalty.value(y, dict, &x.view(), cfg.lambda);
    let mut best = (objective, x.clone());

    for _ in 0..cfg.max_iters {
        // v = z - step * grad(z) = z - 2 step Phi^T Phi z + 2 step Phi^T Y
        let mut v = gram2.dot(&momentum_point);
        Zip::from(&mut v)
            .and(&momentum_point)
            .and(&target)
            .for_each(|v, &z, &b| *v = z - *v + b);
        penalty.prox(&mut v, kappa);

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        momentum_point = &v + &((&v - &x) * beta);
        x = v;
        theta = theta_next;

        let next = penalty.value(y, dict, &x.view(), cfg.lambda);
        if !next.is_finite() {
            return Err(SssaError::NonFinite("FISTA iterate"));
        }
        if next < best.0 {
            best = (next, x.clone());
        }
        let change = (objective - next).abs();
        objective = next;
        if change <= cfg.rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(best.1)
}
