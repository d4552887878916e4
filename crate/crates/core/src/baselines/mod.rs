//! Comparison solvers: per-column OMP, SOMP, and FISTA for the LASSO and
//! row-group LASSO objectives.

mod greedy;
mod prox;

pub use greedy::{omp, omp_columns, omp_with_trace, somp, somp_with_trace, GreedyConfig, GreedyTrace};
pub use prox::{fista_group_lasso, fista_lasso, group_lasso_objective, lasso_objective, ProxConfig};
