#ifndef SSSA_H
#define SSSA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SssaStatus {
  SSSA_STATUS_OK = 0,
  SSSA_STATUS_NULL_POINTER = 1,
  SSSA_STATUS_INVALID_ARGUMENT = 2,
  SSSA_STATUS_DIMENSION_MISMATCH = 3,
  SSSA_STATUS_INVALID_DATA = 4,
  SSSA_STATUS_SOLVER_FAILURE = 5,
  SSSA_STATUS_BUFFER_TOO_SMALL = 6,
  SSSA_STATUS_PANIC = 7,
} SssaStatus;

/**
 * A dictionary paired with one multi-channel signal.
 */
typedef struct SssaProblem SssaProblem;

/**
 * Coefficients and run statistics of one solve.
 */
typedef struct SssaSolution SssaSolution;

/**
 * Multi-SSSA settings; obtain defaults from [`sssa_solver_config_default`].
 */
typedef struct SssaSolverConfig {
  double lambda1;
  double lambda2;
  double mu1;
  double mu2;
  double eps;
  size_t iter_max;
  size_t k_max;
} SssaSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sssa_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *sssa_last_error_message(void);

struct SssaSolverConfig sssa_solver_config_default(void);

/**
 * Builds a problem from a `channels x atoms` dictionary and a
 * `channels x time_steps` signal, both row-major. With `normalize` nonzero
 * the dictionary columns are scaled to unit norm; otherwise they must
 * already be unit norm.
 *
 * # Safety
 * `dictionary` and `signals` must point to buffers of the stated sizes and
 * `out` must be a valid pointer.
 */
enum SssaStatus sssa_problem_new(const double *dictionary,
                                 size_t channels,
                                 size_t atoms,
                                 const double *signals,
                                 size_t time_steps,
                                 int32_t normalize,
                                 struct SssaProblem **out);

/**
 * # Safety
 * `problem` must come from [`sssa_problem_new`] and not be freed twice.
 */
void sssa_problem_free(struct SssaProblem *problem);

/**
 * Fused-LASSO objective of a row-major `atoms x time_steps` coefficient matrix.
 *
 * # Safety
 * `coefficients` must hold `atoms * time_steps` values; `out` must be valid.
 */
enum SssaStatus sssa_objective(const struct SssaProblem *problem,
                               const double *coefficients,
                               double lambda1,
                               double lambda2,
                               double *out);

/**
 * Multi-SSSA solve from a zero start.
 *
 * # Safety
 * `problem` and `config` must be valid; `out` receives a new solution.
 */
enum SssaStatus sssa_solve_multi(const struct SssaProblem *problem,
                                 const struct SssaSolverConfig *config,
                                 struct SssaSolution **out);

/**
 * FISTA on the LASSO objective.
 *
 * # Safety
 * See [`sssa_solve_multi`].
 */
enum SssaStatus sssa_solve_lasso(const struct SssaProblem *problem,
                                 double lambda,
                                 struct SssaSolution **out);

/**
 * FISTA on the row-group LASSO objective.
 *
 * # Safety
 * See [`sssa_solve_multi`].
 */
enum SssaStatus sssa_solve_group_lasso(const struct SssaProblem *problem,
                                       double lambda,
                                       struct SssaSolution **out);

/**
 * Orthogonal matching pursuit on every time step independently.
 *
 * # Safety
 * See [`sssa_solve_multi`].
 */
enum SssaStatus sssa_solve_omp(const struct SssaProblem *problem,
                               size_t max_atoms,
                               struct SssaSolution **out);

/**
 * Simultaneous OMP with one support shared by all time steps.
 *
 * # Safety
 * See [`sssa_solve_multi`].
 */
enum SssaStatus sssa_solve_somp(const struct SssaProblem *problem,
                                size_t max_atoms,
                                struct SssaSolution **out);

/**
 * Number of coefficient rows (atoms); 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live solution handle.
 */
size_t sssa_solution_rows(const struct SssaSolution *solution);

/**
 * Number of coefficient columns (time steps); 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live solution handle.
 */
size_t sssa_solution_cols(const struct SssaSolution *solution);

/**
 * Objective minimized by the method at the returned coefficients; NaN for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live solution handle.
 */
double sssa_solution_objective(const struct SssaSolution *solution);

/**
 * Iterations run (Multi-SSSA only; 0 otherwise).
 *
 * # Safety
 * `solution` must be NULL or a live solution handle.
 */
size_t sssa_solution_iterations(const struct SssaSolution *solution);

/**
 * 1 when the stopping tolerance was reached, 0 otherwise.
 *
 * # Safety
 * `solution` must be NULL or a live solution handle.
 */
int32_t sssa_solution_converged(const struct SssaSolution *solution);

/**
 * Copies the coefficients, row-major, into `buffer` of `len` doubles.
 *
 * # Safety
 * `buffer` must be writable for `len` doubles.
 */
enum SssaStatus sssa_solution_copy_coefficients(const struct SssaSolution *solution,
                                                double *buffer,
                                                size_t len);

/**
 * # Safety
 * `solution` must come from a solve call and not be freed twice.
 */
void sssa_solution_free(struct SssaSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSSA_H */
