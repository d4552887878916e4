use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, SssaError};
use crate::linalg::{least_squares, select_columns};
use crate::model::{Dictionary, SignalSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedyConfig {
    /// Upper bound on the support size.
    pub max_atoms: usize,
    /// Stop once the residual norm is at or below this value.
    #[serde(default)]
    pub residual_tol: f64,
}

impl GreedyConfig {
    pub fn new(max_atoms: usize) -> Self {
        Self {
            max_atoms,
            residual_tol: 0.0,
        }
    }

    fn validate(&self, n_atoms: usize) -> Result<()> {
        if self.max_atoms == 0 || self.max_atoms > n_atoms {
            return Err(SssaError::InvalidConfig(format!(
                "max_atoms must lie in 1..={n_atoms}, got {}",
                self.max_atoms
            )));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(SssaError::InvalidConfig(format!(
                "residual_tol must be nonnegative, got {}",
                self.residual_tol
            )));
        }
        Ok(())
    }
}

/// Greedy selection history, in selection order (0-based atom indices).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyTrace {
    pub selected: Vec<usize>,
    /// Residual norm before the first selection and after each one.
    pub residual_norms: Vec<f64>,
}

// Correlations at or below this fraction of the signal norm are treated as
// numerically zero: the residual is orthogonal to every remaining atom.
const CORRELATION_FLOOR: f64 = 1e-14;

/// Orthogonal matching pursuit on a single signal.
pub fn omp(y: &ArrayView1<f64>, dict: &Dictionary, cfg: &GreedyConfig) -> Result<Array1<f64>> {
    omp_with_trace(y, dict, cfg).map(|(x, _)| x)
}

pub fn omp_with_trace(
    y: &ArrayView1<f64>,
    dict: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<(Array1<f64>, GreedyTrace)> {
    check_dim("signal length vs channels", y.len(), dict.channels())?;
    let y2 = y.to_owned().insert_axis(Axis(1));
    let (x, trace) = pursue(&y2.view(), dict, cfg)?;
    Ok((x.column(0).to_owned(), trace))
}

/// Simultaneous OMP: one support shared by every column of `Y`, selected by
/// the l2 norm of each atom's correlations with the residual matrix.
pub fn somp(y: &SignalSet, dict: &Dictionary, cfg: &GreedyConfig) -> Result<Array2<f64>> {
    somp_with_trace(y, dict, cfg).map(|(x, _)| x)
}

pub fn somp_with_trace(
    y: &SignalSet,
    dict: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<(Array2<f64>, GreedyTrace)> {
    check_dim("signal channels vs dictionary channels", y.channels(), dict.channels())?;
    pursue(&y.samples().view(), dict, cfg)
}

/// Runs OMP independently on every column.
pub fn omp_columns(y: &SignalSet, dict: &Dictionary, cfg: &GreedyConfig) -> Result<Array2<f64>> {
    check_dim("signal channels vs dictionary channels", y.channels(), dict.channels())?;
    let mut x = Array2::zeros((dict.n_atoms(), y.len()));
    for (t, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        col.assign(&omp(&y.column(t), dict, cfg)?);
    }
    Ok(x)
}

// Shared greedy loop. With a single column the l2 aggregation is |corr|, so
// this is plain OMP.
fn pursue(
    y: &ArrayView2<f64>,
    dict: &Dictionary,
    cfg: &GreedyConfig,
) -> Result<(Array2<f64>, GreedyTrace)> {
    let n = dict.n_atoms();
    cfg.validate(n)?;
    let phi = dict.atoms();
    let cols = y.ncols();
    let limit = cfg.max_atoms.min(dict.channels());

    let column_norms = |r: &Array2<f64>| {
        r.axis_iter(Axis(1))
            .map(|c| c.dot(&c).sqrt())
            .fold(0.0f64, f64::max)
    };
    let fro = |r: &Array2<f64>| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut residual = y.to_owned();
    let signal_norm = fro(&residual);
    let mut coefs: Option<Array2<f64>> = None;
    let mut trace = GreedyTrace {
        selected: Vec::new(),
        residual_norms: vec![signal_norm],
    };
    let mut chosen = vec![false; n];

    while trace.selected.len() < limit {
        if column_norms(&residual) <= cfg.residual_tol || signal_norm == 0.0 {
            break;
        }
        let corr = phi.t().dot(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (atom, row) in corr.axis_iter(Axis(0)).enumerate() {
            if chosen[atom] {
                continue;
            }
            let score = row.dot(&row).sqrt();
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((atom, score));
            }
        }
        let Some((atom, score)) = best else { break };
        if score <= CORRELATION_FLOOR * signal_norm {
            break;
        }
        trace.selected.push(atom);
        let sub = select_columns(&phi.view(), &trace.selected);
        let Some(fit) = least_squares(&sub.view(), y) else {
            // the new atom is numerically dependent on the current support
            trace.selected.pop();
            break;
        };
        chosen[atom] = true;
        residual = y - &sub.dot(&fit);
        trace.residual_norms.push(fro(&residual));
        coefs = Some(fit);
    }

    let mut x = Array2::zeros((n, cols));
    if let Some(fit) = coefs {
        for (row, &atom) in trace.selected.iter().enumerate() {
            x.row_mut(atom).assign(&fit.row(row));
        }
    }
    Ok((x, trace))
}
