//! Problem representation: dictionaries, signal sets, the temporal difference
//! operator and the fused-LASSO objective
//!
//! ```text
//! f(X) = ||Y - Phi X||_F^2 + lambda1 ||X||_1 + lambda2 ||X P||_1
//! ```
//!
//! The fit term carries no 1/2 factor. Every solver in the crate uses this
//! convention so that objective values are directly comparable.

use ndarray::{s, Array2, ArrayView2, Axis, Zip};

use crate::error::{check_dim, Result, SssaError};

/// An `N x T` matrix of decomposition weights (also used for the split
/// variables and their Bregman duals).
pub type CoefficientMatrix = Array2<f64>;

const UNIT_NORM_TOL: f64 = 1e-12;
const ZERO_ATOM_NORM: f64 = 1e-300;

/// A `C x N` dictionary whose columns (atoms) have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Array2<f64>,
}

impl Dictionary {
    /// Wraps a matrix whose columns are already unit norm.
    pub fn from_unit_columns(atoms: Array2<f64>) -> Result<Self> {
        ensure_finite(&atoms.view(), "dictionary")?;
        for (index, col) in atoms.axis_iter(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if norm < ZERO_ATOM_NORM {
                return Err(SssaError::ZeroAtom { index });
            }
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(SssaError::InvalidConfig(format!(
                    "dictionary atom {index} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn channels(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    /// Largest absolute inner product between two distinct atoms.
    pub fn mutual_coherence(&self) -> f64 {
        let gram = self.atoms.t().dot(&self.atoms);
        let n = gram.nrows();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(gram[[i, j]].abs());
                }
            }
        }
        best
    }
}

/// Divides every column of `raw` by its Euclidean norm.
pub fn normalize_dictionary(raw: Array2<f64>) -> Result<Dictionary> {
    ensure_finite(&raw.view(), "dictionary")?;
    let mut atoms = raw;
    for (index, mut col) in atoms.axis_iter_mut(Axis(1)).enumerate() {
        let norm = col.dot(&col).sqrt();
        if norm < ZERO_ATOM_NORM {
            return Err(SssaError::ZeroAtom { index });
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(Dictionary { atoms })
}

/// A `C x T` matrix of multi-channel samples, one column per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    samples: Array2<f64>,
}

impl SignalSet {
    pub fn new(samples: Array2<f64>) -> Result<Self> {
        ensure_finite(&samples.view(), "signals")?;
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    /// Samples at one time step (0-based).
    pub fn column(&self, t: usize) -> ndarray::ArrayView1<'_, f64> {
        self.samples.column(t)
    }
}

/// The `T x (T-1)` first-difference operator `P`: column `k` holds `-1` at
/// row `k` and `+1` at row `k+1`, so `(X P)(:, k) = X(:, k+1) - X(:, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator {
    t: usize,
}

impl DifferenceOperator {
    pub fn new(t: usize) -> Result<Self> {
        if t < 2 {
            return Err(SssaError::InvalidT(t));
        }
        Ok(Self { t })
    }

    pub fn time_steps(&self) -> usize {
        self.t
    }

    /// Dense `T x (T-1)` matrix.
    pub fn matrix(&self) -> Array2<f64> {
        let mut p = Array2::zeros((self.t, self.t - 1));
        for k in 0..self.t - 1 {
            p[[k, k]] = -1.0;
            p[[k + 1, k]] = 1.0;
        }
        p
    }

    /// `P P^T`, the `T x T` path-graph Laplacian.
    pub fn gram(&self) -> Array2<f64> {
        let t = self.t;
        let mut g = Array2::zeros((t, t));
        for i in 0..t {
            let degree = if i == 0 || i == t - 1 { 1.0 } else { 2.0 };
            g[[i, i]] = degree;
            if i + 1 < t {
                g[[i, i + 1]] = -1.0;
                g[[i + 1, i]] = -1.0;
            }
        }
        g
    }

    /// `X P`: consecutive column differences, `N x (T-1)`.
    pub fn apply(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim("columns of X vs T", x.ncols(), self.t)?;
        let mut out = x.slice(s![.., 1..]).to_owned();
        out -= &x.slice(s![.., ..-1]);
        Ok(out)
    }

    /// `B P^T` for an `N x (T-1)` matrix `B`, giving `N x T`.
    pub fn apply_transpose(&self, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim("columns of B vs T-1", b.ncols(), self.t - 1)?;
        let mut out = Array2::zeros((b.nrows(), self.t));
        // column t receives +B(:, t-1) and -B(:, t)
        out.slice_mut(s![.., 1..]).assign(b);
        out.slice_mut(s![.., ..-1]).zip_mut_with(b, |o, &v| *o -= v);
        Ok(out)
    }
}

/// Builds the chain difference operator for `t` time steps.
pub fn build_difference_operator(t: usize) -> Result<DifferenceOperator> {
    DifferenceOperator::new(t)
}

/// Observations, dictionary and temporal structure of one decomposition problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    dictionary: Dictionary,
    signals: SignalSet,
    structure: DifferenceOperator,
}

impl ProblemInstance {
    pub fn new(dictionary: Dictionary, signals: SignalSet) -> Result<Self> {
        check_dim(
            "dictionary channels vs signal channels",
            dictionary.channels(),
            signals.channels(),
        )?;
        let structure = DifferenceOperator::new(signals.len())?;
        Ok(Self {
            dictionary,
            signals,
            structure,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn signals(&self) -> &SignalSet {
        &self.signals
    }

    pub fn structure(&self) -> &DifferenceOperator {
        &self.structure
    }

    pub fn n_atoms(&self) -> usize {
        self.dictionary.n_atoms()
    }

    pub fn time_steps(&self) -> usize {
        self.signals.len()
    }

    pub(crate) fn check_coefficients(&self, x: &ArrayView2<f64>) -> Result<()> {
        check_dim("rows of X vs atoms", x.nrows(), self.n_atoms())?;
        check_dim("columns of X vs time steps", x.ncols(), self.time_steps())
    }
}

/// `||Y - Phi X||_F^2 + lambda1 ||X||_1 + lambda2 ||X P||_1`.
pub fn objective_value(
    inst: &ProblemInstance,
    x: &ArrayView2<f64>,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    inst.check_coefficients(x)?;
    let residual = inst.signals.samples() - &inst.dictionary.atoms().dot(x);
    let fit = frobenius_sq(&residual.view());
    let l1 = l1_norm(x);
    let tv = l1_norm(&inst.structure.apply(x)?.view());
    Ok(fit + lambda1 * l1 + lambda2 * tv)
}

/// `||X_new - X_old||_F / ||X_new||_F`, with `0` when both vanish and
/// `+inf` when only `X_new` vanishes.
pub fn relative_change(x_new: &ArrayView2<f64>, x_old: &ArrayView2<f64>) -> Result<f64> {
    check_dim("rows", x_new.nrows(), x_old.nrows())?;
    check_dim("columns", x_new.ncols(), x_old.ncols())?;
    let mut diff_sq = 0.0;
    Zip::from(x_new).and(x_old).for_each(|&a, &b| {
        let d = a - b;
        diff_sq += d * d;
    });
    let denom = frobenius(x_new);
    let num = diff_sq.sqrt();
    if denom == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / denom)
}

pub fn frobenius(m: &ArrayView2<f64>) -> f64 {
    frobenius_sq(m).sqrt()
}

pub fn frobenius_sq(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn l1_norm(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

pub(crate) fn ensure_finite(m: &ArrayView2<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SssaError::NonFinite(what))
    }
}
