//! Alternating-direction solver for the l1-data-fidelity LASSO.
//!
//! The problem is split as
//!
//! ```text
//! minimize ||r||_1 + lambda ||w||_1   subject to   A x - r = rhs,   x - w = 0
//! ```
//!
//! so both nonsmooth terms get closed-form soft-thresholding steps. The
//! x-update solves `(I + A^T A) x = A^T (r + rhs - u) + (w - v)`, which is the
//! same system for every penalty value and every lambda, so the factorization
//! is computed once per matrix in [`AdmmWorkspace`] and shared along a lambda
//! path. For wide matrices the Woodbury identity reduces it to an `m x m`
//! inverse of `I + A A^T`.

use nalgebra::{DMatrix, DVector};

use super::{LassoProblem, SolverOptions, SolverResult};
use super::kernels::{axpy, dot, mul_skip_zeros, mul_symmetric, mul_transpose, norm2};
use crate::error::{invalid, Error, Result};

const BALANCE_RATIO: f64 = 10.0;
const BALANCE_FACTOR: f64 = 2.0;
/// Penalty updates stop after this many checks so the final phase runs with a
/// fixed penalty.
const MAX_PENALTY_UPDATES: usize = 40;
const RESYNC_EVERY: usize = 250;
const POLISH_EVERY: usize = 50;

enum Factor {
    /// `(I + A A^T)^{-1}`, used when `m <= n`.
    Wide(DMatrix<f64>),
    /// `(I + A^T A)^{-1}`, used when `m > n`.
    Tall(DMatrix<f64>),
}

/// Matrix-dependent precomputation reusable across right-hand sides and lambdas.
pub struct AdmmWorkspace {
    matrix: DMatrix<f64>,
    factor: Factor,
}

/// Iterate state carried between solves on the same workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    r: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    penalty: f64,
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl AdmmWorkspace {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 || n == 0 {
            return invalid("matrix must be nonempty");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("matrix contains NaN or infinite values");
        }
        let factor = if m <= n {
            let gram = DMatrix::identity(m, m) + &matrix * matrix.transpose();
            Factor::Wide(spd_inverse(gram)?)
        } else {
            let gram = DMatrix::identity(n, n) + matrix.transpose() * &matrix;
            Factor::Tall(spd_inverse(gram)?)
        };
        Ok(Self { matrix, factor })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Solves for one right-hand side and lambda, optionally continuing from
    /// an earlier state.
    pub fn solve(
        &self,
        rhs: &DVector<f64>,
        lambda: f64,
        opts: &SolverOptions,
        warm: Option<&WarmStart>,
    ) -> Result<(SolverResult, WarmStart)> {
        let (m, n) = self.matrix.shape();
        opts.validate()?;
        if rhs.len() != m {
            return invalid(format!("rhs has length {} but matrix has {m} rows", rhs.len()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be positive and finite, got {lambda}"));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return invalid("rhs contains NaN or infinite values");
        }
        if let Some(ws) = warm {
            if ws.r.len() != m || ws.w.len() != n {
                return invalid("warm start does not match problem dimensions");
            }
        }

        let a = self.matrix.as_slice();
        let y = rhs.as_slice();

        // Zero is optimal when sign(rhs) is a dual certificate.
        let g: Vec<f64> = y.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
        let mut atg = vec![0.0; n];
        mul_transpose(a, m, &g, &mut atg);
        if atg.iter().all(|v| v.abs() <= lambda) {
            let rho = warm.map_or(opts.penalty, |w| w.penalty);
            let state = WarmStart {
                r: y.iter().map(|v| -v).collect(),
                w: vec![0.0; n],
                u: g.iter().map(|v| -v / rho).collect(),
                v: atg.iter().map(|v| v / rho).collect(),
                penalty: rho,
            };
            let result = SolverResult {
                estimate: DVector::zeros(n),
                objective: y.iter().map(|v| v.abs()).sum(),
                iterations: 0,
                converged: true,
                primal_residual: 0.0,
                dual_residual: 0.0,
                duality_gap: 0.0,
            };
            return Ok((result, state));
        }

        let mut state = match (warm, opts.warm_start) {
            (Some(ws), true) => ws.clone(),
            _ => WarmStart {
                r: vec![0.0; m],
                w: vec![0.0; n],
                u: vec![0.0; m],
                v: vec![0.0; n],
                penalty: opts.penalty,
            },
        };
        let WarmStart {
            ref mut r,
            ref mut w,
            ref mut u,
            ref mut v,
            penalty: ref mut rho,
        } = state;

        let alpha = opts.relaxation;
        let mut pw = vec![0.0; m];
        let mut pv = vec![0.0; m];
        mul_skip_zeros(a, m, w, &mut pw);
        mul_skip_zeros(a, m, v, &mut pv);

        let mut c = vec![0.0; m];
        let mut t = vec![0.0; m];
        let mut ax = vec![0.0; m];
        let mut x = vec![0.0; n];
        let mut tmp_n = vec![0.0; n];
        let mut r_old = vec![0.0; m];
        let mut w_old = vec![0.0; n];
        let mut dual_m = vec![0.0; m];
        let mut dual_n = vec![0.0; n];

        let mut best_w = w.clone();
        let mut best_obj = f64::INFINITY;
        let mut best_dual = 0.0f64;
        let mut gap = f64::INFINITY;
        let mut primal_rel = f64::INFINITY;
        let mut dual_rel = f64::INFINITY;
        let mut converged = false;
        let mut polished = false;
        let mut iterations = 0;
        let mut penalty_updates = 0;

        for k in 1..=opts.max_iterations {
            iterations = k;
            for i in 0..m {
                c[i] = r[i] + y[i] - u[i];
            }
            match &self.factor {
                Factor::Wide(inv) => {
                    // (I + A A^T) t = c - A d,  x = A^T t + d,  A x = c - t
                    for i in 0..m {
                        ax[i] = c[i] - (pw[i] - pv[i]);
                    }
                    mul_symmetric(inv.as_slice(), &ax, &mut t);
                    mul_transpose(a, m, &t, &mut x);
                    for j in 0..n {
                        x[j] += w[j] - v[j];
                    }
                    for i in 0..m {
                        ax[i] = c[i] - t[i];
                    }
                }
                Factor::Tall(inv) => {
                    mul_transpose(a, m, &c, &mut tmp_n);
                    for j in 0..n {
                        tmp_n[j] += w[j] - v[j];
                    }
                    mul_symmetric(inv.as_slice(), &tmp_n, &mut x);
                    mul_skip_zeros(a, m, &x, &mut ax);
                }
            }

            let check = k % opts.check_every == 0 || k == opts.max_iterations;
            if check {
                r_old.copy_from_slice(r);
                w_old.copy_from_slice(w);
            }

            let inv_rho = 1.0 / *rho;
            for i in 0..m {
                let axh = alpha * ax[i] + (1.0 - alpha) * (r[i] + y[i]);
                // A applied to the relaxed x, needed to keep A v in sync.
                let pxh = alpha * ax[i] + (1.0 - alpha) * pw[i];
                r[i] = soft(axh - y[i] + u[i], inv_rho);
                u[i] += axh - y[i] - r[i];
                pv[i] += pxh;
            }
            let thresh = lambda * inv_rho;
            for j in 0..n {
                let xh = alpha * x[j] + (1.0 - alpha) * w[j];
                w[j] = soft(xh + v[j], thresh);
                v[j] += xh - w[j];
            }
            mul_skip_zeros(a, m, w, &mut pw);
            for i in 0..m {
                pv[i] -= pw[i];
            }
            if k % RESYNC_EVERY == 0 {
                mul_skip_zeros(a, m, v, &mut pv);
            }

            if !check {
                continue;
            }

            let mut prim_sq = 0.0;
            for i in 0..m {
                let d = ax[i] - r[i] - y[i];
                prim_sq += d * d;
            }
            for j in 0..n {
                let d = x[j] - w[j];
                prim_sq += d * d;
            }
            let scale_pri = (dot(&ax, &ax) + dot(&x, &x))
                .sqrt()
                .max((dot(r, r) + dot(w, w)).sqrt())
                .max(norm2(y));

            for i in 0..m {
                dual_m[i] = r[i] - r_old[i];
            }
            mul_transpose(a, m, &dual_m, &mut dual_n);
            for j in 0..n {
                dual_n[j] += w[j] - w_old[j];
            }
            let dual_abs = *rho * norm2(&dual_n);
            // A'u + v vanishes at the optimum, so scale by its parts.
            mul_transpose(a, m, u, &mut dual_n);
            let scale_dual = *rho * norm2(&dual_n).max(norm2(v));

            primal_rel = if scale_pri > 0.0 { prim_sq.sqrt() / scale_pri } else { 0.0 };
            dual_rel = if scale_dual > 0.0 { dual_abs / scale_dual } else { 0.0 };

            let obj = y.iter().zip(&pw).map(|(yi, pi)| (yi - pi).abs()).sum::<f64>()
                + lambda * w.iter().map(|v| v.abs()).sum::<f64>();
            if obj < best_obj {
                best_obj = obj;
                best_w.copy_from_slice(w);
            }

            // z = -rho u, shrunk into {|z| <= 1, |A'z| <= lambda}, is dual
            // feasible with value z'y.
            let zmax = u.iter().fold(0.0f64, |acc, e| acc.max(e.abs())) * *rho;
            let atz_max = dual_n.iter().fold(0.0f64, |acc, e| acc.max(e.abs())) * *rho;
            let shrink = zmax.max(atz_max / lambda).max(1.0);
            let dual_obj = -*rho * dot(u, y) / shrink;
            best_dual = best_dual.max(dual_obj);
            gap = best_obj - best_dual;

            if gap <= opts.tolerance * best_obj {
                converged = true;
                break;
            }

            if k % POLISH_EVERY == 0 {
                for i in 0..m {
                    t[i] = y[i] - pw[i];
                }
                // dual_n still holds A'u.
                if let Some(p) = polish_candidates(&self.matrix, y, lambda, &t, w, u, &dual_n, *rho) {
                    if p.objective < best_obj {
                        best_obj = p.objective;
                        best_w.copy_from_slice(&p.estimate);
                    }
                    best_dual = best_dual.max(p.dual_objective);
                    gap = best_obj - best_dual;
                    if gap <= opts.tolerance * best_obj {
                        polished = true;
                        converged = true;
                        break;
                    }
                }
            }

            if opts.adaptive_penalty && penalty_updates < MAX_PENALTY_UPDATES {
                let scale = if primal_rel > BALANCE_RATIO * dual_rel {
                    BALANCE_FACTOR
                } else if dual_rel > BALANCE_RATIO * primal_rel {
                    1.0 / BALANCE_FACTOR
                } else {
                    1.0
                };
                if scale != 1.0 {
                    *rho *= scale;
                    let shrink = 1.0 / scale;
                    u.iter_mut().for_each(|e| *e *= shrink);
                    v.iter_mut().for_each(|e| *e *= shrink);
                    pv.iter_mut().for_each(|e| *e *= shrink);
                    penalty_updates += 1;
                }
            }
        }

        if polished {
            // The polished point satisfies the splitting constraints exactly;
            // its remaining suboptimality is what the certificate leaves open.
            primal_rel = 0.0;
            dual_rel = gap / best_obj;
        }
        let estimate = DVector::from_vec(best_w);
        let objective = super::objective(&self.matrix, rhs, lambda, &estimate);
        let result = SolverResult {
            estimate,
            objective,
            iterations,
            converged,
            primal_residual: primal_rel,
            dual_residual: dual_rel,
            duality_gap: gap,
        };
        Ok((result, state))
    }
}

fn spd_inverse(gram: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Internal("identity-shifted Gram matrix is not positive definite".into()))?;
    Ok(chol.inverse())
}

/// Exact solution on the active set read off an iterate, with the dual
/// bound that certifies it.
struct Polished {
    estimate: Vec<f64>,
    objective: f64,
    dual_objective: f64,
}

/// Tries a few basis guesses read off the iterate, keeping the lowest
/// objective and the highest dual bound among them. The support is `w`'s, alone or joined by the columns
/// whose dual sits at the bound `lambda`; the rows are ranked either by the
/// residual `y - A w` or by how far the dual `-rho u` is inside the unit box.
#[allow(clippy::too_many_arguments)]
fn polish_candidates(
    a: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    residual: &[f64],
    w: &[f64],
    u: &[f64],
    atu: &[f64],
    rho: f64,
) -> Option<Polished> {
    const DUAL_SLACK: f64 = 1e-3;
    const SWAP_LIMIT: usize = 40;
    let (m, n) = a.shape();
    let support: Vec<usize> = (0..n).filter(|&j| w[j] != 0.0).collect();
    let widened: Vec<usize> = (0..n)
        .filter(|&j| w[j] != 0.0 || rho * atu[j].abs() >= lambda * (1.0 - DUAL_SLACK))
        .collect();
    let rank = |key: &dyn Fn(usize) -> f64| {
        let mut rows: Vec<usize> = (0..m).collect();
        rows.sort_by(|&i, &j| key(i).total_cmp(&key(j)).then(i.cmp(&j)));
        rows
    };
    let by_residual = rank(&|i| residual[i].abs());
    let by_dual = rank(&|i| rho * u[i].abs());

    let mut guesses = vec![(&support, &by_residual), (&support, &by_dual)];
    if widened.len() > support.len() {
        guesses.extend([(&widened, &by_residual), (&widened, &by_dual)]);
    }
    let mut bases: Vec<(&[usize], Vec<usize>)> = Vec::new();
    for (cols, rows) in guesses {
        let k = cols.len();
        if k > m {
            continue;
        }
        bases.push((cols, rows[..k].to_vec()));
        // Near-ties in the ranking are common close to a degenerate vertex,
        // so small bases also try each swap of one row for the next one.
        if k < m && k <= SWAP_LIMIT {
            for drop in 0..k {
                let mut swapped: Vec<usize> = rows[..=k].to_vec();
                swapped.remove(drop);
                bases.push((cols, swapped));
            }
        }
    }
    let mut best: Option<Polished> = None;
    for (cols, rows) in bases {
        let Some(p) = polish(a, y, lambda, cols, &rows) else {
            continue;
        };
        best = Some(match best {
            None => p,
            Some(b) => {
                let dual_objective = b.dual_objective.max(p.dual_objective);
                let keep = if p.objective < b.objective { p } else { b };
                Polished { dual_objective, ..keep }
            }
        });
    }
    best
}

/// Takes the columns `support` and as many `rows` as a guess of the optimal
/// basis. The basic solution interpolates those rows on the support; the
/// multipliers off the rows are the residual signs and those on the rows
/// follow from stationarity on the support. Shrunk into the dual feasible set
/// they bound the optimum from below, so a wrong guess is merely not
/// certified.
fn polish(a: &DMatrix<f64>, y: &[f64], lambda: f64, support: &[usize], rows: &[usize]) -> Option<Polished> {
    let (m, n) = a.shape();
    let k = support.len();
    if k == 0 || rows.len() != k {
        return None;
    }
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    let sub = DMatrix::from_fn(k, k, |p, q| a[(rows[p], support[q])]);
    let xs = sub.clone().lu().solve(&DVector::from_iterator(k, rows.iter().map(|&i| y[i])))?;
    if xs.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return None;
    }

    let mut estimate = vec![0.0; n];
    let mut residual = y.to_vec();
    for (q, &j) in support.iter().enumerate() {
        estimate[j] = xs[q];
        axpy(-xs[q], &a.as_slice()[j * m..(j + 1) * m], &mut residual);
    }
    let mut in_rows = vec![false; m];
    for &i in &rows {
        in_rows[i] = true;
        residual[i] = 0.0;
    }

    let mut z: Vec<f64> = (0..m)
        .map(|i| if in_rows[i] { 0.0 } else { residual[i].signum() })
        .collect();
    // A_{Z,S}' z_Z = lambda sign(x_S) - A_{rest,S}' z_rest
    let rhs = DVector::from_iterator(
        k,
        support
            .iter()
            .enumerate()
            .map(|(q, &j)| lambda * xs[q].signum() - dot(&a.as_slice()[j * m..(j + 1) * m], &z)),
    );
    let zr = sub.transpose().lu().solve(&rhs)?;
    for (p, &i) in rows.iter().enumerate() {
        z[i] = zr[p];
    }
    if z.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let mut atz = vec![0.0; n];
    mul_transpose(a.as_slice(), m, &z, &mut atz);
    let zmax = z.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let atz_max = atz.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let shrink = zmax.max(atz_max / lambda).max(1.0);
    let dual_objective = dot(&z, y) / shrink;
    let objective = residual.iter().map(|v| v.abs()).sum::<f64>()
        + lambda * estimate.iter().map(|v| v.abs()).sum::<f64>();
    Some(Polished {
        estimate,
        objective,
        dual_objective,
    })
}

/// Solves one problem from a cold start.
pub fn solve_l1_lasso(problem: &LassoProblem, opts: &SolverOptions) -> Result<SolverResult> {
    let ws = AdmmWorkspace::new(problem.matrix().clone())?;
    ws.solve(problem.rhs(), problem.lambda(), opts, None).map(|(r, _)| r)
}
