//! The l1-data-fidelity LASSO
//!
//! ```text
//! minimize  ||rhs - A x||_1 + lambda ||x||_1
//! ```
//!
//! solved by an alternating-direction splitting ([`solve_l1_lasso`]) and, for
//! small instances, by an exact simplex solve of the equivalent linear program
//! ([`lp_oracle`]). The two share no numerical routines beyond evaluating the
//! objective.
//!
//! Monte Carlo runs at full size use [`InteriorPointSolver`], which walks a
//! lambda grid and certifies every answer with a duality gap.
//! [`PathSolver`] is a long-step simplex over the same grid.

mod admm;
mod ipm;
mod kernels;
mod lp;
mod path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::SparseSignal;

pub use admm::{solve_l1_lasso, AdmmWorkspace, WarmStart};
pub use lp::{lp_oracle, lp_oracle_certified, LpCertificate, LP_SIZE_LIMIT};
pub use ipm::{solve_interior_point, InteriorPointSolver};
pub use path::{solve_simplex, PathSolver};

/// One instance of the recovery problem on the recovery rows.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    lambda: f64,
}

impl LassoProblem {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>, lambda: f64) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return invalid("problem matrix must be nonempty");
        }
        if matrix.nrows() != rhs.len() {
            return invalid(format!(
                "matrix has {} rows but rhs has length {}",
                matrix.nrows(),
                rhs.len()
            ));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be positive and finite, got {lambda}"));
        }
        if matrix.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return invalid("problem data contains NaN or infinite values");
        }
        Ok(Self {
            matrix,
            rhs,
            lambda,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Objective value at `x`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        objective(&self.matrix, &self.rhs, self.lambda, x)
    }
}

/// `||rhs - A x||_1 + lambda ||x||_1`.
pub fn objective(matrix: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    let residual = rhs - matrix * x;
    residual.lp_norm(1) + lambda * x.lp_norm(1)
}

/// Iteration controls for [`solve_l1_lasso`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Bound on the duality gap relative to the objective.
    pub tolerance: f64,
    /// Initial augmented-Lagrangian penalty.
    pub penalty: f64,
    /// Rebalance the penalty when one residual dominates the other.
    pub adaptive_penalty: bool,
    /// Over-relaxation factor in `(0, 2)`; `1.0` is plain ADMM.
    pub relaxation: f64,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Reuse the previous solution along a lambda path.
    pub warm_start: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-7,
            penalty: 1.0,
            adaptive_penalty: true,
            relaxation: 1.6,
            check_every: 10,
            warm_start: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return invalid("max_iterations must be positive");
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return invalid("tolerance must be positive");
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return invalid("penalty must be positive");
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return invalid("relaxation must lie in (0, 2)");
        }
        if self.check_every == 0 {
            return invalid("check_every must be positive");
        }
        Ok(())
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub estimate: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Objective minus the best dual bound found; certifies suboptimality.
    pub duality_gap: f64,
}

/// Which route solves the recovery problem along a lambda grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Admm,
    #[default]
    InteriorPoint,
    Simplex,
}

/// Solves on one matrix for every lambda; results follow the input order.
/// ADMM walks the grid from large to small lambda and, when
/// `opts.warm_start` is set, continues from the previous iterate.
pub fn solve_grid(
    kind: SolverKind,
    matrix: DMatrix<f64>,
    rhs: &DVector<f64>,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SolverResult>> {
    match kind {
        SolverKind::InteriorPoint => InteriorPointSolver::new(matrix)?.solve_path(rhs, lambdas, opts),
        SolverKind::Simplex => PathSolver::new(matrix)?.solve_path(rhs, lambdas, opts),
        SolverKind::Admm => {
            let ws = AdmmWorkspace::new(matrix)?;
            let mut order: Vec<usize> = (0..lambdas.len()).collect();
            order.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]));
            let mut out: Vec<Option<SolverResult>> = vec![None; lambdas.len()];
            let mut warm: Option<WarmStart> = None;
            for idx in order {
                let (r, state) = ws.solve(rhs, lambdas[idx], opts, warm.as_ref().filter(|_| opts.warm_start))?;
                out[idx] = Some(r);
                warm = Some(state);
            }
            Ok(out.into_iter().map(|r| r.expect("every lambda visited")).collect())
        }
    }
}

/// `||x - estimate||_2`.
pub fn recovery_error(signal: &SparseSignal, result: &SolverResult) -> Result<f64> {
    recovery_error_of(signal, &result.estimate)
}

pub fn recovery_error_of(signal: &SparseSignal, estimate: &DVector<f64>) -> Result<f64> {
    if signal.len() != estimate.len() {
        return invalid(format!(
            "signal length {} does not match estimate length {}",
            signal.len(),
            estimate.len()
        ));
    }
    Ok((signal.values() - estimate).norm())
}
