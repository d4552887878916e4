//! Grid sweep over data regimes with train-set hyperparameter selection and
//! paired comparisons of every baseline against Multi-SSSA.

mod report;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fista_group_lasso, fista_lasso, omp_columns, somp, GreedyConfig, ProxConfig,
};
use crate::error::{check_dim, Result, SssaError};
use crate::model::{frobenius, CoefficientMatrix, Dictionary, ProblemInstance, SignalSet};
use crate::solver::{multi_sssa_solve, SolverConfig};
use crate::synthgen::{derive_seed, generate_split, Dataset, GenConfig};

pub use report::{
    competence_map, emit_report, parse_pgm, read_bench_output, render_pgm, results_csv,
    write_bench_output, BaselineMap, BenchOutput, CompetenceMap, Emit, PgmMeta, CELLS_FILE,
    RESULTS_HEADER,
};
pub use stats::{
    ln_gamma, mean_std, paired_t_test, regularized_incomplete_beta, student_t_two_sided_p, TTest,
};

/// Significance level of the paired comparisons.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MultiSssa,
    Omp,
    Somp,
    Lasso,
    GroupLasso,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MultiSssa,
        Method::Omp,
        Method::Somp,
        Method::Lasso,
        Method::GroupLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MultiSssa => "multi-sssa",
            Method::Omp => "omp",
            Method::Somp => "somp",
            Method::Lasso => "lasso",
            Method::GroupLasso => "group-lasso",
        }
    }

    /// Whether the method's hyperparameter is an atom count.
    pub fn is_greedy(self) -> bool {
        matches!(self, Method::Omp | Method::Somp)
    }

    /// Default search grid for a dictionary of `n_atoms` atoms.
    pub fn default_grid(self, n_atoms: usize) -> HyperGrid {
        let lambdas = vec![1e-3, 1e-2, 1e-1, 1.0, 10.0];
        match self {
            Method::MultiSssa => HyperGrid {
                hp1: lambdas.clone(),
                hp2: Some(lambdas),
            },
            Method::Omp | Method::Somp => {
                let mut atoms: Vec<usize> =
                    [1, 2, 4, 8, 16].into_iter().filter(|&k| k <= n_atoms).collect();
                if atoms.last() != Some(&n_atoms) {
                    atoms.push(n_atoms);
                }
                HyperGrid {
                    hp1: atoms.into_iter().map(|k| k as f64).collect(),
                    hp2: None,
                }
            }
            Method::Lasso | Method::GroupLasso => HyperGrid {
                hp1: lambdas,
                hp2: None,
            },
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SssaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SssaError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// A point of a method's hyperparameter grid: `(lambda1, lambda2)` for
/// Multi-SSSA, `lambda` for the proximal baselines, the atom budget for the
/// greedy ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub hp1: f64,
    #[serde(default)]
    pub hp2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub hp1: Vec<f64>,
    #[serde(default)]
    pub hp2: Option<Vec<f64>>,
}

impl HyperGrid {
    /// Grid points in ascending `(hp1, hp2)` order.
    pub fn points(&self) -> Vec<HyperPoint> {
        let mut hp1 = self.hp1.clone();
        hp1.sort_by(f64::total_cmp);
        let hp2 = self.hp2.as_ref().map(|v| {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            v
        });
        let mut out = Vec::new();
        for &a in &hp1 {
            match &hp2 {
                Some(bs) => out.extend(bs.iter().map(|&b| HyperPoint { hp1: a, hp2: Some(b) })),
                None => out.push(HyperPoint { hp1: a, hp2: None }),
            }
        }
        out
    }
}

/// Iteration limits for the proximal baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxSettings {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for ProxSettings {
    fn default() -> Self {
        let p = ProxConfig::new(0.0);
        Self {
            max_iters: p.max_iters,
            rel_tol: p.rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_a_values: Vec<usize>,
    pub duration_pairs: Vec<(f64, f64)>,
    /// Base generator settings; `n_a`, `d_min`, `d_max` and `seed` are set per cell.
    pub base: GenConfig,
    /// Methods to run; must include Multi-SSSA, the reference of every comparison.
    pub methods: Vec<Method>,
    /// Grid overrides; methods without an entry use [`Method::default_grid`].
    pub grids: BTreeMap<Method, HyperGrid>,
    /// Multi-SSSA settings; the lambdas are replaced by grid points.
    pub solver: SolverConfig,
    pub prox: ProxSettings,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_a_values: vec![5, 15, 25],
            duration_pairs: vec![(0.1, 0.15), (0.5, 0.55), (0.9, 0.95)],
            base: GenConfig::default(),
            methods: Method::ALL.to_vec(),
            grids: BTreeMap::new(),
            solver: SolverConfig::default(),
            prox: ProxSettings::default(),
        }
    }
}

impl GridSpec {
    pub fn shape(&self) -> (usize, usize) {
        (self.n_a_values.len(), self.duration_pairs.len())
    }

    pub fn grid_for(&self, method: Method) -> HyperGrid {
        self.grids
            .get(&method)
            .cloned()
            .unwrap_or_else(|| method.default_grid(self.base.atoms))
    }

    /// Baselines in the configured order.
    pub fn baselines(&self) -> Vec<Method> {
        self.methods
            .iter()
            .copied()
            .filter(|&m| m != Method::MultiSssa)
            .collect()
    }

    /// Generator settings of one cell, including its derived seed.
    pub fn cell_config(&self, na_index: usize, dur_index: usize) -> Result<GenConfig> {
        let (rows, cols) = self.shape();
        if na_index >= rows || dur_index >= cols {
            return Err(SssaError::InvalidConfig(format!(
                "cell ({na_index}, {dur_index}) outside the {rows}x{cols} grid"
            )));
        }
        let (d_min, d_max) = self.duration_pairs[dur_index];
        Ok(GenConfig {
            n_a: self.n_a_values[na_index],
            d_min,
            d_max,
            seed: derive_seed(derive_seed(self.base.seed, na_index as u64), dur_index as u64),
            ..self.base.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SssaError::InvalidConfig(msg.to_string()));
        if self.n_a_values.is_empty() || self.duration_pairs.is_empty() {
            return bad("n_a_values and duration_pairs must be non-empty");
        }
        if self.base.signals < 2 {
            return bad("K must be at least 2 for the paired comparisons");
        }
        for &(lo, hi) in &self.duration_pairs {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(SssaError::InvalidConfig(format!(
                    "duration pair ({lo}, {hi}) must satisfy 0 <= d_min <= d_max <= 1"
                )));
            }
        }
        if !self.methods.contains(&Method::MultiSssa) {
            return bad("methods must include multi-sssa");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods must not repeat");
        }
        for &m in &self.methods {
            let grid = self.grid_for(m);
            if grid.hp1.is_empty() || grid.hp2.as_ref().is_some_and(Vec::is_empty) {
                return Err(SssaError::InvalidConfig(format!("empty grid for {m}")));
            }
            if (m == Method::MultiSssa) != grid.hp2.is_some() {
                return Err(SssaError::InvalidConfig(format!(
                    "{m} grid must {}have an hp2 list",
                    if m == Method::MultiSssa { "" } else { "not " }
                )));
            }
            let all_finite = grid.hp1.iter().chain(grid.hp2.iter().flatten()).all(|v| v.is_finite());
            if !all_finite {
                return Err(SssaError::InvalidConfig(format!("non-finite value in {m} grid")));
            }
            if m.is_greedy() {
                for &k in &grid.hp1 {
                    if k.fract() != 0.0 || k < 1.0 || k > self.base.atoms as f64 {
                        return Err(SssaError::InvalidConfig(format!(
                            "{m} atom budget {k} must be an integer in 1..={}",
                            self.base.atoms
                        )));
                    }
                }
            }
        }
        self.base.validate()?;
        self.solver.validate()
    }
}

/// `||X_true - X_est||_F / ||X_true||_F`
pub fn dist(x_true: &ArrayView2<f64>, x_est: &ArrayView2<f64>) -> Result<f64> {
    check_dim("distance rows", x_true.nrows(), x_est.nrows())?;
    check_dim("distance columns", x_true.ncols(), x_est.ncols())?;
    let reference = frobenius(x_true);
    if reference == 0.0 {
        return Err(SssaError::ZeroReference);
    }
    Ok(frobenius(&(x_true - x_est).view()) / reference)
}

/// Estimates the decomposition of one signal set with `method` at `hp`.
pub fn estimate(
    method: Method,
    hp: HyperPoint,
    dict: &Dictionary,
    y: &SignalSet,
    spec: &GridSpec,
) -> Result<CoefficientMatrix> {
    match method {
        Method::MultiSssa => {
            let cfg = SolverConfig {
                lambda1: hp.hp1,
                lambda2: hp.hp2.unwrap_or(hp.hp1),
                ..spec.solver.clone()
            };
            let inst = ProblemInstance::new(dict.clone(), y.clone())?;
            Ok(multi_sssa_solve(&inst, &cfg, None)?.x)
        }
        Method::Omp => omp_columns(y, dict, &GreedyConfig::new(hp.hp1 as usize)),
        Method::Somp => somp(y, dict, &GreedyConfig::new(hp.hp1 as usize)),
        Method::Lasso | Method::GroupLasso => {
            let cfg = ProxConfig {
                max_iters: spec.prox.max_iters,
                rel_tol: spec.prox.rel_tol,
                ..ProxConfig::new(hp.hp1)
            };
            if method == Method::Lasso {
                fista_lasso(y, dict, &cfg)
            } else {
                fista_group_lasso(y, dict, &cfg)
            }
        }
    }
}

/// Distances of `method` at `hp` on every pair of `data`.
pub fn evaluate(method: Method, hp: HyperPoint, data: &Dataset, spec: &GridSpec) -> Result<Vec<f64>> {
    data.signals
        .iter()
        .zip(&data.true_coeffs)
        .map(|(y, x)| {
            let est = estimate(method, hp, &data.dictionary, y, spec)?;
            dist(&x.view(), &est.view())
        })
        .collect()
}

/// Grid point with the lowest mean train distance, with that mean. Ties go
/// to the smallest `hp1`, then the smallest `hp2`.
pub fn hyper_search(
    method: Method,
    train: &Dataset,
    grid: &HyperGrid,
    spec: &GridSpec,
) -> Result<(HyperPoint, f64)> {
    let mut best: Option<(HyperPoint, f64)> = None;
    for hp in grid.points() {
        let (mean, _) = mean_std(&evaluate(method, hp, train, spec)?);
        log::debug!("{method} at {hp:?}: mean train dist {mean}");
        if best.map_or(true, |(_, b)| mean < b || (b.is_nan() && !mean.is_nan())) {
            best = Some((hp, mean));
        }
    }
    best.ok_or_else(|| SssaError::InvalidConfig(format!("empty grid for {method}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Baseline mean minus Multi-SSSA mean; negative favours the baseline.
    pub mean_diff: f64,
    #[serde(with = "nonfinite")]
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub hyper: HyperPoint,
    pub train_mean: f64,
    /// Test distances, one per test signal.
    pub distances: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Paired test against Multi-SSSA; `None` for Multi-SSSA itself.
    pub versus_sssa: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub na_index: usize,
    pub dur_index: usize,
    pub n_a: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub seed: u64,
    /// False when the cell is degenerate (e.g. every true decomposition is zero).
    pub valid: bool,
    #[serde(default)]
    pub diagnostic: Option<String>,
    pub methods: Vec<MethodResult>,
}

impl CellResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Runs one grid cell: generate, select hyperparameters on train, evaluate on test.
pub fn run_cell(spec: &GridSpec, na_index: usize, dur_index: usize) -> Result<CellResult> {
    let wrap = |e: SssaError| match e {
        SssaError::Cell { .. } => e,
        other => SssaError::Cell {
            na_index,
            dur_index,
            source: Box::new(other),
        },
    };
    spec.validate().map_err(wrap)?;
    let cfg = spec.cell_config(na_index, dur_index).map_err(wrap)?;
    let mut cell = CellResult {
        na_index,
        dur_index,
        n_a: cfg.n_a,
        d_min: cfg.d_min,
        d_max: cfg.d_max,
        seed: cfg.seed,
        valid: true,
        diagnostic: None,
        methods: Vec::new(),
    };
    match cell_methods(spec, &cfg) {
        Ok(methods) => cell.methods = methods,
        Err(SssaError::ZeroReference) => {
            log::warn!("cell ({na_index}, {dur_index}) has a zero ground-truth decomposition");
            cell.valid = false;
            cell.diagnostic = Some(SssaError::ZeroReference.to_string());
        }
        Err(e) => return Err(wrap(e)),
    }
    Ok(cell)
}

fn cell_methods(spec: &GridSpec, cfg: &GenConfig) -> Result<Vec<MethodResult>> {
    let (train, test) = generate_split(cfg)?;
    let mut results = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let (hyper, train_mean) = hyper_search(method, &train, &spec.grid_for(method), spec)?;
        let distances = evaluate(method, hyper, &test, spec)?;
        let (mean, std) = mean_std(&distances);
        log::info!(
            "n_a={} d=({}, {}) {method}: hp {hyper:?}, test mean {mean:.4}",
            cfg.n_a,
            cfg.d_min,
            cfg.d_max
        );
        results.push(MethodResult {
            method,
            hyper,
            train_mean,
            distances,
            mean,
            std,
            versus_sssa: None,
        });
    }
    let reference = results
        .iter()
        .find(|r| r.method == Method::MultiSssa)
        .map(|r| r.distances.clone())
        .ok_or_else(|| SssaError::InvalidConfig("methods must include multi-sssa".into()))?;
    for r in results.iter_mut().filter(|r| r.method != Method::MultiSssa) {
        let test = paired_t_test(&r.distances, &reference)?;
        r.versus_sssa = Some(Comparison {
            mean_diff: test.mean_diff,
            t: test.t,
            p: test.p,
            significant: test.p < SIGNIFICANCE_LEVEL,
        });
    }
    Ok(results)
}

/// Runs every cell on a pool of `jobs` workers; results are in row-major
/// cell order whatever the schedule.
pub fn run_grid(spec: &GridSpec, jobs: usize) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let (rows, cols) = spec.shape();
    let coords: Vec<(usize, usize)> =
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SssaError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        coords
            .par_iter()
            .map(|&(i, j)| run_cell(spec, i, j))
            .collect()
    })
}

// JSON has no infinities; write them as strings.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_spec() -> GridSpec {
        GridSpec {
            n_a_values: vec![3],
            duration_pairs: vec![(0.3, 0.5)],
            base: GenConfig {
                channels: 6,
                atoms: 8,
                time_steps: 12,
                signals: 4,
                ..GenConfig::default()
            },
            grids: BTreeMap::from([
                (Method::MultiSssa, HyperGrid { hp1: vec![0.01, 0.1], hp2: Some(vec![0.1]) }),
                (Method::Lasso, HyperGrid { hp1: vec![0.01, 0.1], hp2: None }),
                (Method::GroupLasso, HyperGrid { hp1: vec![0.1], hp2: None }),
            ]),
            ..GridSpec::default()
        }
    }

    #[test]
    fn dist_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((5, 7), |_| rng.gen_range(-1.0..1.0));
        assert_eq!(dist(&x.view(), &x.view()).unwrap(), 0.0);
        assert_abs_diff_eq!(dist(&x.view(), &Array2::zeros((5, 7)).view()).unwrap(), 1.0);
        let raw = Array2::from_shape_fn((5, 7), |_| rng.gen_range(-1.0..1.0));
        let delta = &raw * (0.5 * frobenius(&x.view()) / frobenius(&raw.view()));
        assert_abs_diff_eq!(dist(&x.view(), &(&x + &delta).view()).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn dist_errors() {
        let z = Array2::zeros((2, 3));
        assert!(matches!(dist(&z.view(), &z.view()), Err(SssaError::ZeroReference)));
        let other = Array2::ones((3, 2));
        assert!(matches!(
            dist(&Array2::ones((2, 3)).view(), &other.view()),
            Err(SssaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("lars".parse::<Method>().is_err());
    }

    #[test]
    fn default_grids() {
        let g = Method::Omp.default_grid(20);
        assert_eq!(g.hp1, vec![1.0, 2.0, 4.0, 8.0, 16.0, 20.0]);
        let g = Method::Somp.default_grid(8);
        assert_eq!(g.hp1, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(Method::MultiSssa.default_grid(20).points().len(), 25);
    }

    #[test]
    fn grid_points_sorted() {
        let g = HyperGrid {
            hp1: vec![1.0, 0.1],
            hp2: Some(vec![2.0, 0.5]),
        };
        let pts: Vec<_> = g.points().iter().map(|p| (p.hp1, p.hp2.unwrap())).collect();
        assert_eq!(pts, vec![(0.1, 0.5), (0.1, 2.0), (1.0, 0.5), (1.0, 2.0)]);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::default().validate().is_ok());
        let mut s = GridSpec::default();
        s.methods = vec![Method::Omp];
        assert!(s.validate().is_err());
        let mut s = GridSpec::default();
        s.duration_pairs = vec![(0.6, 0.5)];
        assert!(s.validate().is_err());
        let mut s = GridSpec::default();
        s.grids.insert(Method::Omp, HyperGrid { hp1: vec![2.5], hp2: None });
        assert!(s.validate().is_err());
        let mut s = GridSpec::default();
        s.n_a_values.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_defaults_and_unknown_fields() {
        let s: GridSpec = serde_json::from_str(r#"{"n_a_values": [5]}"#).unwrap();
        assert_eq!(s.n_a_values, vec![5]);
        assert_eq!(s.duration_pairs, GridSpec::default().duration_pairs);
        assert!(serde_json::from_str::<GridSpec>(r#"{"bogus": 1}"#).is_err());
        let text = serde_json::to_string(&small_spec()).unwrap();
        assert_eq!(serde_json::from_str::<GridSpec>(&text).unwrap(), small_spec());
    }

    #[test]
    fn cell_seeds_depend_on_coordinates_only() {
        let spec = GridSpec::default();
        let a = spec.cell_config(1, 2).unwrap();
        assert_eq!(a.seed, derive_seed(derive_seed(0, 1), 2));
        assert_eq!((a.n_a, a.d_min, a.d_max), (15, 0.9, 0.95));
        assert_ne!(spec.cell_config(2, 1).unwrap().seed, a.seed);
        assert!(spec.cell_config(3, 0).is_err());
    }

    #[test]
    fn single_point_grid() {
        let spec = small_spec();
        let (train, _) = generate_split(&spec.cell_config(0, 0).unwrap()).unwrap();
        let grid = HyperGrid { hp1: vec![0.1], hp2: None };
        let (hp, _) = hyper_search(Method::Lasso, &train, &grid, &spec).unwrap();
        assert_eq!(hp, HyperPoint { hp1: 0.1, hp2: None });
    }

    #[test]
    fn dominated_lambda_is_rejected() {
        let spec = small_spec();
        let (train, _) = generate_split(&spec.cell_config(0, 0).unwrap()).unwrap();
        let grid = HyperGrid { hp1: vec![1e6, 0.01], hp2: None };
        let (hp, mean) = hyper_search(Method::Lasso, &train, &grid, &spec).unwrap();
        assert_eq!(hp.hp1, 0.01);
        assert!(mean < 1.0);
        let huge = evaluate(Method::Lasso, HyperPoint { hp1: 1e6, hp2: None }, &train, &spec).unwrap();
        assert!(huge.iter().all(|&d| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ties_prefer_smallest_hyperparameters() {
        // every lambda large enough to zero the estimate gives dist 1
        let spec = small_spec();
        let (train, _) = generate_split(&spec.cell_config(0, 0).unwrap()).unwrap();
        let grid = HyperGrid { hp1: vec![1e8, 1e6, 1e7], hp2: Some(vec![1e7, 1e6]) };
        let (hp, mean) = hyper_search(Method::MultiSssa, &train, &grid, &spec).unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        assert_eq!(hp, HyperPoint { hp1: 1e6, hp2: Some(1e6) });
    }

    #[test]
    fn degenerate_cell_is_marked_invalid() {
        let mut spec = small_spec();
        spec.n_a_values = vec![0];
        let cell = run_cell(&spec, 0, 0).unwrap();
        assert!(!cell.valid);
        assert!(cell.methods.is_empty());
        assert!(cell.diagnostic.is_some());
    }

    #[test]
    fn cell_result_is_reproducible_and_consistent() {
        let spec = small_spec();
        let a = run_cell(&spec, 0, 0).unwrap();
        let b = run_cell(&spec, 0, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.valid);
        assert_eq!(a.methods.len(), Method::ALL.len());
        let sssa = a.method(Method::MultiSssa).unwrap();
        assert!(sssa.versus_sssa.is_none());
        for r in &a.methods {
            assert_eq!(r.distances.len(), 4);
            assert!(r.distances.iter().all(|&d| d >= 0.0));
            let (m, s) = mean_std(&r.distances);
            assert_abs_diff_eq!(r.mean, m, epsilon = 1e-12);
            assert_abs_diff_eq!(r.std, s, epsilon = 1e-12);
            if let Some(c) = r.versus_sssa {
                assert!((0.0..=1.0).contains(&c.p));
                assert_eq!(c.significant, c.p < 0.05);
                assert_abs_diff_eq!(c.mean_diff, r.mean - sssa.mean, epsilon = 1e-12);
            }
        }
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<CellResult>(&json).unwrap(), a);
    }

    #[test]
    fn errors_carry_cell_context() {
        let mut spec = small_spec();
        spec.solver.mu1 = -1.0;
        match run_cell(&spec, 0, 0) {
            Err(SssaError::Cell { na_index: 0, dur_index: 0, .. }) => {}
            other => panic!("expected a cell error, got {other:?}"),
        }
    }

    #[test]
    fn infinite_t_survives_json() {
        let c = Comparison { mean_diff: 1.0, t: f64::NEG_INFINITY, p: 0.0, significant: true };
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Comparison>(&json).unwrap(), c);
    }
}
