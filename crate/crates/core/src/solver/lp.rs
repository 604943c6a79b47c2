//! Exact linear-programming route to the l1-data-fidelity LASSO, used to
//! certify the splitting solver on small instances.
//!
//! With `x = x+ - x-` and `rhs - A x = e+ - e-` the problem becomes the
//! standard-form LP
//!
//! ```text
//! minimize  lambda 1'(x+ + x-) + 1'(e+ + e-)
//! s.t.      A x+ - A x- + e+ - e- = rhs,   all variables >= 0
//! ```
//!
//! which is always feasible (`x = 0`) and bounded below by zero. Choosing `e+_i`
//! or `e-_i` by the sign of `rhs_i` gives an identity starting basis, so no
//! phase one is needed. The tableau is pivoted with Dantzig's rule, falling
//! back to Bland's rule after a run of degenerate pivots.

use nalgebra::{DMatrix, DVector};

use super::{LassoProblem, SolverResult};
use crate::error::{invalid, Error, Result};

/// Largest `rows * cols` accepted by the oracle.
pub const LP_SIZE_LIMIT: usize = 10_000;

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;
const GAP_TOL: f64 = 1e-8;

/// Oracle solution together with its duality certificate.
#[derive(Debug, Clone)]
pub struct LpCertificate {
    pub result: SolverResult,
    /// Dual objective of a feasible dual point; a lower bound on the optimum.
    pub dual_objective: f64,
    /// `objective - dual_objective`.
    pub duality_gap: f64,
}

pub fn lp_oracle(problem: &LassoProblem) -> Result<SolverResult> {
    lp_oracle_certified(problem).map(|c| c.result)
}

pub fn lp_oracle_certified(problem: &LassoProblem) -> Result<LpCertificate> {
    let a = problem.matrix();
    let rhs = problem.rhs();
    let lambda = problem.lambda();
    let (m, n) = a.shape();
    if m * n > LP_SIZE_LIMIT {
        return invalid(format!(
            "LP oracle limited to rows*cols <= {LP_SIZE_LIMIT}, got {m}x{n}"
        ));
    }

    // Columns: [x+ (n) | x- (n) | e+ (m) | e- (m)]
    let ncols = 2 * n + 2 * m;
    let column = |j: usize| -> DVector<f64> {
        if j < n {
            a.column(j).into_owned()
        } else if j < 2 * n {
            -a.column(j - n).into_owned()
        } else if j < 2 * n + m {
            let mut e = DVector::zeros(m);
            e[j - 2 * n] = 1.0;
            e
        } else {
            let mut e = DVector::zeros(m);
            e[j - 2 * n - m] = -1.0;
            e
        }
    };
    let cost = |j: usize| if j < 2 * n { lambda } else { 1.0 };

    // Tableau rows are scaled by sign(rhs_i) so the starting basis is the identity.
    let mut tab = DMatrix::<f64>::zeros(m, ncols + 1);
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let s = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[(i, j)] = s * a[(i, j)];
            tab[(i, n + j)] = -s * a[(i, j)];
        }
        tab[(i, 2 * n + i)] = s;
        tab[(i, 2 * n + m + i)] = -s;
        tab[(i, ncols)] = s * rhs[i];
        basis[i] = if s > 0.0 { 2 * n + i } else { 2 * n + m + i };
    }

    let max_pivots = 100 * (m + ncols);
    let mut pivots = 0;
    let mut degenerate = 0;
    loop {
        // Reduced costs d_j = c_j - c_B' T_j.
        let mut entering = None;
        let mut best = -PIVOT_TOL;
        let bland = degenerate >= DEGENERATE_STREAK;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let mut d = cost(j);
            for i in 0..m {
                d -= cost(basis[i]) * tab[(i, j)];
            }
            if bland {
                if d < -PIVOT_TOL {
                    entering = Some(j);
                    break;
                }
            } else if d < best {
                best = d;
                entering = Some(j);
            }
        }
        let Some(q) = entering else { break };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let t = tab[(i, q)];
            if t > PIVOT_TOL {
                let ratio = tab[(i, ncols)] / t;
                let better = match leaving {
                    None => true,
                    Some((l, r)) => ratio < r - 1e-14 || (ratio <= r + 1e-14 && basis[i] < basis[l]),
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((p, ratio)) = leaving else {
            return Err(Error::Internal("LP reported unbounded; the l1 objective cannot be".into()));
        };
        if ratio.abs() <= 1e-14 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        let piv = tab[(p, q)];
        for j in 0..=ncols {
            tab[(p, j)] /= piv;
        }
        for i in 0..m {
            if i != p {
                let f = tab[(i, q)];
                if f != 0.0 {
                    for j in 0..=ncols {
                        let delta = f * tab[(p, j)];
                        tab[(i, j)] -= delta;
                    }
                }
            }
        }
        basis[p] = q;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Internal(format!("simplex exceeded {max_pivots} pivots")));
        }
    }

    // Re-solve the final basis from the original data to shed tableau drift.
    let b = DMatrix::from_columns(&basis.iter().map(|&j| column(j)).collect::<Vec<_>>());
    let lu = b.clone().lu();
    let xb = lu
        .solve(rhs)
        .ok_or_else(|| Error::Internal("final simplex basis is singular".into()))?;
    let mut estimate = DVector::zeros(n);
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            estimate[j] += xb[i];
        } else if j < 2 * n {
            estimate[j - n] -= xb[i];
        }
    }
    let primal_residual = (&b * &xb - rhs).amax();

    let cb = DVector::from_iterator(m, basis.iter().map(|&j| cost(j)));
    let y = b
        .transpose()
        .lu()
        .solve(&cb)
        .ok_or_else(|| Error::Internal("final simplex basis is singular".into()))?;
    let aty = a.transpose() * &y;
    let infeasibility = (y.amax() - 1.0).max(aty.amax() - lambda).max(0.0);
    // Pull y into the unit box; the residual excess of A'y over lambda is
    // charged against the recovered estimate.
    let y = &y / y.amax().max(1.0);
    let excess = ((a.transpose() * &y).amax() - lambda).max(0.0);
    let objective = super::objective(a, rhs, lambda, &estimate);
    let dual_objective = rhs.dot(&y) - excess * estimate.lp_norm(1);
    let duality_gap = objective - dual_objective;
    if duality_gap > GAP_TOL * objective.max(1.0) {
        return Err(Error::Internal(format!(
            "simplex optimum failed certification: duality gap {duality_gap:e}"
        )));
    }

    Ok(LpCertificate {
        result: SolverResult {
            estimate,
            objective,
            iterations: pivots,
            converged: true,
            primal_residual,
            dual_residual: infeasibility,
            duality_gap,
        },
        dual_objective,
        duality_gap,
    })
}
