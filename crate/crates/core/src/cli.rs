//! Command-line front end: `generate`, `solve`, `bench`, `report`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{
    fista_group_lasso, fista_lasso, group_lasso_objective, lasso_objective, omp_columns, somp,
    GreedyConfig, ProxConfig,
};
use crate::bench::{
    emit_report, read_bench_output, run_grid, write_bench_output, BenchOutput, Emit, GridSpec,
    Method,
};
use crate::error::{Result, SssaError};
use crate::io::{read_json, read_matrix, write_json, write_matrix};
use crate::model::{normalize_dictionary, objective_value, Dictionary, ProblemInstance, SignalSet};
use crate::solver::{multi_sssa_solve, SolverConfig};
use crate::synthgen::{generate_split, write_dataset, GenConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable selecting the log level (`error`, `info`, `debug`).
pub const LOG_ENV: &str = "SSSA_LOG";

#[derive(Debug, Parser)]
#[command(name = "sssa", version, about = "Structured sparse approximation of multi-channel signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/test dataset.
    Generate(GenerateArgs),
    /// Decompose one signal set with one method.
    Solve(SolveArgs),
    /// Run the benchmark grid sweep and write its report.
    Bench(BenchArgs),
    /// Re-render the report of a bench output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON generator settings (C, N, T, K, n_a, d_min, d_max, weight_std, noise_std, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Multi-SSSA settings shared by `solve` and `bench`.
#[derive(Debug, Args, Default)]
pub struct SolverFlags {
    #[arg(long, allow_negative_numbers = true)]
    pub mu1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub iter_max: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.mu1 {
            cfg.mu1 = v;
        }
        if let Some(v) = self.mu2 {
            cfg.mu2 = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.iter_max {
            cfg.iter_max = v;
        }
        if let Some(v) = self.k_max {
            cfg.k_max = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dictionary CSV (`C x N`); columns are normalized if needed.
    #[arg(long)]
    pub dict: PathBuf,
    /// Signal CSV (`C x T`).
    #[arg(long)]
    pub signals: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "multi-sssa", value_parser = parse_method)]
    pub method: Method,
    /// JSON solver settings (lambda1, lambda2, mu1, mu2, eps, iter_max, k_max).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// l1 weight; also the lambda of `lasso` and `group-lasso`.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda1: Option<f64>,
    /// Total-variation weight.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda2: Option<f64>,
    /// Atom budget of `omp` and `somp` (default: number of channels).
    #[arg(long)]
    pub max_atoms: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON grid specification.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed of the sweep.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the cell pool.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Map formats besides results.csv: a comma-separated subset of csv,pgm.
    #[arg(long, default_value = "csv,pgm", value_parser = parse_emit)]
    pub emit: Emit,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Bench output directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Destination (default: the input directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv,pgm", value_parser = parse_emit)]
    pub emit: Emit,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: SssaError| e.to_string())
}

fn parse_emit(s: &str) -> std::result::Result<Emit, String> {
    s.parse().map_err(|e: SssaError| e.to_string())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for a failed run.
pub fn exit_code(e: &SssaError) -> i32 {
    if e.is_solver_failure() {
        return EXIT_SOLVER;
    }
    match e {
        SssaError::InvalidConfig(_) => EXIT_USAGE,
        SssaError::Cell { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    }
}

fn load_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut cfg: GenConfig = load_or_default(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let (train, test) = generate_split(&cfg)?;
    write_dataset(&a.out, &train, &test)?;
    log::info!("wrote dataset to {}", a.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SolveStats {
    method: Method,
    /// Objective minimized by the method, at the returned coefficients.
    objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_atoms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_b: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    objective_trace: Vec<f64>,
}

fn load_dictionary(path: &Path) -> Result<Dictionary> {
    let raw = read_matrix(path)?;
    match Dictionary::from_unit_columns(raw.clone()) {
        Ok(d) => Ok(d),
        Err(SssaError::InvalidConfig(_)) => {
            log::warn!("{}: normalizing dictionary columns", path.display());
            normalize_dictionary(raw)
        }
        Err(e) => Err(e),
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let mut cfg: SolverConfig = load_or_default(a.config.as_deref())?;
    if let Some(v) = a.lambda1 {
        cfg.lambda1 = v;
    }
    if let Some(v) = a.lambda2 {
        cfg.lambda2 = v;
    }
    a.solver.apply(&mut cfg);
    cfg.validate()?;

    let dict = load_dictionary(&a.dict)?;
    let y = SignalSet::new(read_matrix(&a.signals)?)?;
    let stats = match a.method {
        Method::MultiSssa => {
            let inst = ProblemInstance::new(dict, y)?;
            let sol = multi_sssa_solve(&inst, &cfg, None)?;
            write_matrix(&a.out.join("coeffs.csv"), &sol.x.view())?;
            SolveStats {
                method: a.method,
                objective: objective_value(&inst, &sol.x.view(), cfg.lambda1, cfg.lambda2)?,
                solver: Some(cfg),
                lambda: None,
                max_atoms: None,
                iterations: Some(sol.iterations),
                converged: Some(sol.converged),
                residual_a: Some(sol.residual_a),
                residual_b: Some(sol.residual_b),
                objective_trace: sol.objective_trace,
            }
        }
        Method::Omp | Method::Somp => {
            let k = a.max_atoms.unwrap_or(dict.channels().min(dict.n_atoms()));
            let greedy = GreedyConfig::new(k);
            let x = if a.method == Method::Omp {
                omp_columns(&y, &dict, &greedy)?
            } else {
                somp(&y, &dict, &greedy)?
            };
            write_matrix(&a.out.join("coeffs.csv"), &x.view())?;
            SolveStats {
                method: a.method,
                objective: lasso_objective(&y, &dict, &x.view(), 0.0),
                solver: None,
                lambda: None,
                max_atoms: Some(k),
                iterations: None,
                converged: None,
                residual_a: None,
                residual_b: None,
                objective_trace: Vec::new(),
            }
        }
        Method::Lasso | Method::GroupLasso => {
            let prox = ProxConfig::new(cfg.lambda1);
            let (x, objective) = if a.method == Method::Lasso {
                let x = fista_lasso(&y, &dict, &prox)?;
                let f = lasso_objective(&y, &dict, &x.view(), prox.lambda);
                (x, f)
            } else {
                let x = fista_group_lasso(&y, &dict, &prox)?;
                let f = group_lasso_objective(&y, &dict, &x.view(), prox.lambda);
                (x, f)
            };
            write_matrix(&a.out.join("coeffs.csv"), &x.view())?;
            SolveStats {
                method: a.method,
                objective,
                solver: None,
                lambda: Some(prox.lambda),
                max_atoms: None,
                iterations: None,
                converged: None,
                residual_a: None,
                residual_b: None,
                objective_trace: Vec::new(),
            }
        }
    };
    write_json(&a.out.join("solve_stats.json"), &stats)
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut spec: GridSpec = load_or_default(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        spec.base.seed = seed;
    }
    a.solver.apply(&mut spec.solver);
    spec.validate()?;
    if a.jobs == 0 {
        return Err(SssaError::InvalidConfig("--jobs must be at least 1".into()));
    }
    let (rows, cols) = spec.shape();
    log::info!("running {rows}x{cols} grid on {} worker(s)", a.jobs);
    let cells = run_grid(&spec, a.jobs)?;
    let out = BenchOutput { spec, cells };
    write_bench_output(&a.out, &out)?;
    emit_report(&out, &a.out, a.emit)?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let out = read_bench_output(&a.input)?;
    let dest = a.out.as_deref().unwrap_or(&a.input);
    emit_report(&out, dest, a.emit)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run(["sssa", "--help"]), EXIT_OK);
        assert_eq!(run(["sssa", "solve", "--help"]), EXIT_OK);
        assert_eq!(run(["sssa", "--version"]), EXIT_OK);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["sssa"]), EXIT_USAGE);
        assert_eq!(run(["sssa", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["sssa", "bench", "--out", "x", "--emit", "png"]), EXIT_USAGE);
        assert_eq!(
            run(["sssa", "solve", "--dict", "a", "--signals", "b", "--out", "c", "--method", "lars"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&SssaError::NonFinite("x")), EXIT_SOLVER);
        assert_eq!(exit_code(&SssaError::NotPositiveDefinite { min: 0.0, max: 1.0 }), EXIT_SOLVER);
        assert_eq!(exit_code(&SssaError::InvalidConfig("bad".into())), EXIT_USAGE);
        assert_eq!(
            exit_code(&SssaError::DimensionMismatch { what: "c", left: 1, right: 2 }),
            EXIT_DATA
        );
        let wrapped = SssaError::Cell {
            na_index: 0,
            dur_index: 1,
            source: Box::new(SssaError::NonFinite("x")),
        };
        assert_eq!(exit_code(&wrapped), EXIT_SOLVER);
    }

    #[test]
    fn solver_flags_override_config() {
        let mut cfg = SolverConfig { mu1: 3.0, eps: 1e-3, ..SolverConfig::default() };
        let flags = SolverFlags { mu1: Some(2.0), iter_max: Some(9), ..SolverFlags::default() };
        flags.apply(&mut cfg);
        assert_eq!((cfg.mu1, cfg.eps, cfg.iter_max), (2.0, 1e-3, 9));
    }
}
