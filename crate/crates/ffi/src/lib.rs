//! C ABI over `sssa-core`.
//!
//! Matrices cross the boundary as row-major `double` buffers. Problems and
//! solutions are opaque handles released with their `_free` functions. Every
//! fallible call returns an [`SssaStatus`]; on failure the message is
//! available from [`sssa_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use sssa_core::baselines::{
    fista_group_lasso, fista_lasso, group_lasso_objective, lasso_objective, omp_columns, somp,
    GreedyConfig, ProxConfig,
};
use sssa_core::error::SssaError;
use sssa_core::model::{normalize_dictionary, objective_value, Dictionary, ProblemInstance, SignalSet};
use sssa_core::solver::{multi_sssa_solve, SolverConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SssaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidData = 4,
    SolverFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Multi-SSSA settings; obtain defaults from [`sssa_solver_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SssaSolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub eps: f64,
    pub iter_max: usize,
    pub k_max: usize,
}

impl From<SssaSolverConfig> for SolverConfig {
    fn from(c: SssaSolverConfig) -> Self {
        SolverConfig {
            lambda1: c.lambda1,
            lambda2: c.lambda2,
            mu1: c.mu1,
            mu2: c.mu2,
            eps: c.eps,
            iter_max: c.iter_max,
            k_max: c.k_max,
        }
    }
}

/// A dictionary paired with one multi-channel signal.
pub struct SssaProblem {
    inst: ProblemInstance,
}

/// Coefficients and run statistics of one solve.
pub struct SssaSolution {
    x: Array2<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &SssaError) -> SssaStatus {
    if e.is_solver_failure() {
        return SssaStatus::SolverFailure;
    }
    match e {
        SssaError::DimensionMismatch { .. } | SssaError::NotSquare { .. } => {
            SssaStatus::DimensionMismatch
        }
        SssaError::InvalidConfig(_) | SssaError::NegativeThreshold(_) | SssaError::InvalidT(_) => {
            SssaStatus::InvalidArgument
        }
        _ => SssaStatus::InvalidData,
    }
}

fn fail(status: SssaStatus, msg: impl Into<String>) -> SssaStatus {
    set_error(msg.into());
    status
}

// Runs `f`, recording errors and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (SssaStatus, String)>) -> SssaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SssaStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(SssaStatus::Panic, "internal panic"),
    }
}

fn core_err(e: SssaError) -> (SssaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SssaStatus, String) {
    (SssaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<Array2<f64>, (SssaStatus, String)> {
    if data.is_null() {
        return Err(null(what));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| (SssaStatus::InvalidArgument, format!("{what}: size overflow")))?;
    let slice = std::slice::from_raw_parts(data, len);
    Array2::from_shape_vec((rows, cols), slice.to_vec())
        .map_err(|e| (SssaStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn problem_ref<'a>(p: *const SssaProblem) -> Result<&'a SssaProblem, (SssaStatus, String)> {
    p.as_ref().ok_or_else(|| null("problem"))
}

unsafe fn emit_solution(out: *mut *mut SssaSolution, sol: SssaSolution) {
    *out = Box::into_raw(Box::new(sol));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sssa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sssa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sssa_solver_config_default() -> SssaSolverConfig {
    let d = SolverConfig::default();
    SssaSolverConfig {
        lambda1: d.lambda1,
        lambda2: d.lambda2,
        mu1: d.mu1,
        mu2: d.mu2,
        eps: d.eps,
        iter_max: d.iter_max,
        k_max: d.k_max,
    }
}

/// Builds a problem from a `channels x atoms` dictionary and a
/// `channels x time_steps` signal, both row-major. With `normalize` nonzero
/// the dictionary columns are scaled to unit norm; otherwise they must
/// already be unit norm.
///
/// # Safety
/// `dictionary` and `signals` must point to buffers of the stated sizes and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sssa_problem_new(
    dictionary: *const f64,
    channels: usize,
    atoms: usize,
    signals: *const f64,
    time_steps: usize,
    normalize: i32,
    out: *mut *mut SssaProblem,
) -> SssaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = read_matrix(dictionary, channels, atoms, "dictionary")?;
        let y = read_matrix(signals, channels, time_steps, "signals")?;
        let dict = if normalize != 0 {
            normalize_dictionary(d)
        } else {
            Dictionary::from_unit_columns(d)
        }
        .map_err(core_err)?;
        let y = SignalSet::new(y).map_err(core_err)?;
        let inst = ProblemInstance::new(dict, y).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SssaProblem { inst }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`sssa_problem_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sssa_problem_free(problem: *mut SssaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Fused-LASSO objective of a row-major `atoms x time_steps` coefficient matrix.
///
/// # Safety
/// `coefficients` must hold `atoms * time_steps` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sssa_objective(
    problem: *const SssaProblem,
    coefficients: *const f64,
    lambda1: f64,
    lambda2: f64,
    out: *mut f64,
) -> SssaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = read_matrix(coefficients, p.inst.n_atoms(), p.inst.time_steps(), "coefficients")?;
        *out = objective_value(&p.inst, &x.view(), lambda1, lambda2).map_err(core_err)?;
        Ok(())
    })
}

/// Multi-SSSA solve from a zero start.
///
/// # Safety
/// `problem` and `config` must be valid; `out` receives a new solution.
#[no_mangle]
pub unsafe extern "C" fn sssa_solve_multi(
    problem: *const SssaProblem,
    config: *const SssaSolverConfig,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let cfg: SolverConfig = (*config.as_ref().ok_or_else(|| null("config"))?).into();
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sol = multi_sssa_solve(&p.inst, &cfg, None).map_err(core_err)?;
        let objective =
            objective_value(&p.inst, &sol.x.view(), cfg.lambda1, cfg.lambda2).map_err(core_err)?;
        emit_solution(
            out,
            SssaSolution {
                x: sol.x,
                objective,
                iterations: sol.iterations,
                converged: sol.converged,
            },
        );
        Ok(())
    })
}

unsafe fn solve_prox(
    problem: *const SssaProblem,
    lambda: f64,
    group: bool,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (dict, y) = (p.inst.dictionary(), p.inst.signals());
        let cfg = ProxConfig::new(lambda);
        let (x, objective) = if group {
            let x = fista_group_lasso(y, dict, &cfg).map_err(core_err)?;
            let f = group_lasso_objective(y, dict, &x.view(), lambda);
            (x, f)
        } else {
            let x = fista_lasso(y, dict, &cfg).map_err(core_err)?;
            let f = lasso_objective(y, dict, &x.view(), lambda);
            (x, f)
        };
        emit_solution(
            out,
            SssaSolution {
                x,
                objective,
                iterations: 0,
                converged: true,
            },
        );
        Ok(())
    })
}

/// FISTA on the LASSO objective.
///
/// # Safety
/// See [`sssa_solve_multi`].
#[no_mangle]
pub unsafe extern "C" fn sssa_solve_lasso(
    problem: *const SssaProblem,
    lambda: f64,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    solve_prox(problem, lambda, false, out)
}

/// FISTA on the row-group LASSO objective.
///
/// # Safety
/// See [`sssa_solve_multi`].
#[no_mangle]
pub unsafe extern "C" fn sssa_solve_group_lasso(
    problem: *const SssaProblem,
    lambda: f64,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    solve_prox(problem, lambda, true, out)
}

unsafe fn solve_greedy(
    problem: *const SssaProblem,
    max_atoms: usize,
    simultaneous: bool,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (dict, y) = (p.inst.dictionary(), p.inst.signals());
        let cfg = GreedyConfig::new(max_atoms);
        let x = if simultaneous {
            somp(y, dict, &cfg)
        } else {
            omp_columns(y, dict, &cfg)
        }
        .map_err(core_err)?;
        let objective = lasso_objective(y, dict, &x.view(), 0.0);
        emit_solution(
            out,
            SssaSolution {
                x,
                objective,
                iterations: 0,
                converged: true,
            },
        );
        Ok(())
    })
}

/// Orthogonal matching pursuit on every time step independently.
///
/// # Safety
/// See [`sssa_solve_multi`].
#[no_mangle]
pub unsafe extern "C" fn sssa_solve_omp(
    problem: *const SssaProblem,
    max_atoms: usize,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    solve_greedy(problem, max_atoms, false, out)
}

/// Simultaneous OMP with one support shared by all time steps.
///
/// # Safety
/// See [`sssa_solve_multi`].
#[no_mangle]
pub unsafe extern "C" fn sssa_solve_somp(
    problem: *const SssaProblem,
    max_atoms: usize,
    out: *mut *mut SssaSolution,
) -> SssaStatus {
    solve_greedy(problem, max_atoms, true, out)
}

/// Number of coefficient rows (atoms); 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_rows(solution: *const SssaSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.x.nrows())
}

/// Number of coefficient columns (time steps); 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_cols(solution: *const SssaSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.x.ncols())
}

/// Objective minimized by the method at the returned coefficients; NaN for NULL.
///
/// # Safety
/// `solution` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_objective(solution: *const SssaSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.objective)
}

/// Iterations run (Multi-SSSA only; 0 otherwise).
///
/// # Safety
/// `solution` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_iterations(solution: *const SssaSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.iterations)
}

/// 1 when the stopping tolerance was reached, 0 otherwise.
///
/// # Safety
/// `solution` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_converged(solution: *const SssaSolution) -> i32 {
    solution.as_ref().map_or(0, |s| i32::from(s.converged))
}

/// Copies the coefficients, row-major, into `buffer` of `len` doubles.
///
/// # Safety
/// `buffer` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_copy_coefficients(
    solution: *const SssaSolution,
    buffer: *mut f64,
    len: usize,
) -> SssaStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if len < s.x.len() {
            return Err((
                SssaStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", s.x.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buffer, s.x.len());
        for (d, v) in dst.iter_mut().zip(s.x.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `solution` must come from a solve call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sssa_solution_free(solution: *mut SssaSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
