//! Simplex route along a lambda grid.
//!
//! The problem is written with free variables and absolute-value costs,
//!
//! ```text
//! minimize  sum_i |e_i| + lambda sum_j |x_j|   subject to   A x + e = rhs
//! ```
//!
//! and solved by a simplex method in the style of Barrodale and Roberts: a
//! basis is any `m` nonsingular columns of `[A | I]`, the nonbasic variables
//! sit at their kink (zero), and every basis is feasible. An entering variable
//! moves along a ray on which the objective is convex piecewise linear, and the
//! ratio test walks past every breakpoint where a basic variable merely changes
//! sign, stopping where the slope turns nonnegative. This takes many vertex
//! steps of the standard-form LP in one pivot.
//!
//! Lambda only enters the costs, so the basis reached for one grid value is
//! the starting point for the next. From the all-residual basis the walk
//! starts at `x = 0`, which is optimal above `||A' sign(rhs)||_inf`.
//!
//! The basis inverse is kept explicitly and updated by a rank-one step per
//! pivot, with periodic reinversion, and always a fresh one before optimality
//! is declared.

use nalgebra::{DMatrix, DVector};

use super::kernels::{axpy, dot, mul_transpose};
use super::{LassoProblem, SolverOptions, SolverResult};
use crate::error::{invalid, Error, Result};

const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REINVERT_EVERY: usize = 1000;
const DEGENERATE_STREAK: usize = 50;

/// Simplex solver sharing one matrix across right-hand sides and lambdas.
pub struct PathSolver {
    matrix: DMatrix<f64>,
}

/// Variable ids: `0..n` coefficients, `n..n+m` residuals.
struct Basis<'a> {
    a: &'a [f64],
    m: usize,
    n: usize,
    vars: Vec<usize>,
    /// Row of each variable in the basis, or `usize::MAX`.
    position: Vec<usize>,
    /// Column-major `m x m` basis inverse.
    binv: Vec<f64>,
    values: Vec<f64>,
    /// Side of the kink each basic variable is on; kept when a value is zero.
    signs: Vec<f64>,
    since_reinvert: usize,
}

fn sign_or(v: f64, fallback: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        fallback
    }
}

impl<'a> Basis<'a> {
    fn new(a: &'a [f64], m: usize, n: usize, y: &[f64]) -> Self {
        let mut position = vec![usize::MAX; n + m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            position[n + i] = i;
            binv[i * m + i] = 1.0;
        }
        Self {
            a,
            m,
            n,
            vars: (n..n + m).collect(),
            position,
            binv,
            values: y.to_vec(),
            signs: y.iter().map(|v| sign_or(*v, 1.0)).collect(),
            since_reinvert: 0,
        }
    }

    fn weight(&self, var: usize, lambda: f64) -> f64 {
        if var < self.n {
            lambda
        } else {
            1.0
        }
    }

    fn column(&self, var: usize, out: &mut [f64]) {
        let m = self.m;
        if var < self.n {
            out.copy_from_slice(&self.a[var * m..(var + 1) * m]);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[var - self.n] = 1.0;
        }
    }

    /// `out = B^{-1} column(var)`.
    fn ftran(&self, var: usize, out: &mut [f64]) {
        let m = self.m;
        if var < self.n {
            out.iter_mut().for_each(|v| *v = 0.0);
            for (k, &ak) in self.a[var * m..(var + 1) * m].iter().enumerate() {
                if ak != 0.0 {
                    axpy(ak, &self.binv[k * m..(k + 1) * m], out);
                }
            }
        } else {
            let i = var - self.n;
            out.copy_from_slice(&self.binv[i * m..(i + 1) * m]);
        }
    }

    /// Simplex multipliers `pi = B^{-T} c_B` for the current cost gradient.
    fn duals(&self, lambda: f64, pi: &mut [f64]) {
        let m = self.m;
        let cb: Vec<f64> = self
            .vars
            .iter()
            .zip(&self.signs)
            .map(|(&v, s)| s * self.weight(v, lambda))
            .collect();
        for (k, p) in pi.iter_mut().enumerate() {
            *p = dot(&self.binv[k * m..(k + 1) * m], &cb);
        }
    }

    fn reinvert(&mut self, y: &[f64]) -> Result<()> {
        let m = self.m;
        let mut b = DMatrix::zeros(m, m);
        let mut col = vec![0.0; m];
        for (i, &var) in self.vars.iter().enumerate() {
            self.column(var, &mut col);
            b.column_mut(i).copy_from_slice(&col);
        }
        let inv = b
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Internal("simplex basis became singular".into()))?;
        self.binv.copy_from_slice(inv.as_slice());
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for (k, &yk) in y.iter().enumerate() {
            if yk != 0.0 {
                axpy(yk, &self.binv[k * m..(k + 1) * m], &mut self.values);
            }
        }
        for (s, v) in self.signs.iter_mut().zip(&self.values) {
            *s = sign_or(*v, *s);
        }
        self.since_reinvert = 0;
        Ok(())
    }

    /// Entering variable and direction by normalized reduced cost, or `None`
    /// at optimality.
    fn price(&self, lambda: f64, pi: &[f64], g: &[f64], bland: bool) -> Option<(usize, f64, f64)> {
        let n = self.n;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut consider = |var: usize, gq: f64, w: f64| {
            let d = 1.0 - gq.abs() / w;
            if d < -PRICE_TOL {
                match best {
                    Some((_, _, bd)) if bland || d >= bd => {}
                    _ => best = Some((var, if gq > 0.0 { 1.0 } else { -1.0 }, d)),
                }
            }
        };
        for (j, &gj) in g.iter().enumerate() {
            if self.position[j] == usize::MAX {
                consider(j, gj, lambda);
            }
        }
        for (i, &pii) in pi.iter().enumerate() {
            if self.position[n + i] == usize::MAX {
                consider(n + i, pii, 1.0);
            }
        }
        best.map(|(v, s, d)| (v, s, d * self.weight(v, lambda)))
    }

    /// Long-step ratio test for moving `var` by `t * dir`, `t >= 0`, with the
    /// basic values following `values - t * dir * alpha`. Returns the leaving
    /// row and the step length.
    fn ratio(&self, lambda: f64, dir: f64, slope: f64, alpha: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut breaks: Vec<(f64, usize)> = Vec::new();
        for (i, &ai) in alpha.iter().enumerate() {
            if ai.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * ai;
            let v = self.values[i];
            let crosses = if v != 0.0 { v * rate < 0.0 } else { self.signs[i] * rate < 0.0 };
            if crosses {
                breaks.push(((v / rate).abs(), i));
            }
        }
        breaks.sort_by(|x, y| {
            x.0.total_cmp(&y.0).then_with(|| {
                if bland {
                    self.vars[x.1].cmp(&self.vars[y.1])
                } else {
                    alpha[y.1].abs().total_cmp(&alpha[x.1].abs())
                }
            })
        });
        let mut slope = slope;
        for &(t, i) in &breaks {
            slope += 2.0 * self.weight(self.vars[i], lambda) * alpha[i].abs();
            if slope >= 0.0 {
                return Some((i, t));
            }
        }
        None
    }

    /// Moves the entering variable by `t * dir` and swaps it into row `p`.
    fn pivot(&mut self, p: usize, var: usize, dir: f64, t: f64, alpha: &[f64]) {
        let m = self.m;
        let step = t * dir;
        for ((v, s), a) in self.values.iter_mut().zip(self.signs.iter_mut()).zip(alpha) {
            *v -= step * a;
            *s = sign_or(*v, *s);
        }
        self.values[p] = step;
        self.signs[p] = dir;
        let ap = alpha[p];
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let c = col[p] / ap;
            if c != 0.0 {
                axpy(-c, alpha, col);
                col[p] = c;
            }
        }
        let old = self.vars[p];
        self.position[old] = usize::MAX;
        self.position[var] = p;
        self.vars[p] = var;
        self.since_reinvert += 1;
    }

    /// Pivots to optimality for `lambda`; returns the pivot count.
    fn optimize(&mut self, y: &[f64], lambda: f64, max_pivots: usize) -> Result<usize> {
        let (m, n) = (self.m, self.n);
        let mut pi = vec![0.0; m];
        let mut g = vec![0.0; n];
        let mut alpha = vec![0.0; m];
        let mut pivots = 0;
        let mut degenerate = 0;
        loop {
            self.duals(lambda, &mut pi);
            mul_transpose(self.a, m, &pi, &mut g);
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((q, dir, slope)) = self.price(lambda, &pi, &g, bland) else {
                if self.since_reinvert == 0 {
                    return Ok(pivots);
                }
                // Confirm against a fresh factorization.
                self.reinvert(y)?;
                continue;
            };
            if pivots >= max_pivots {
                self.reinvert(y)?;
                return Ok(pivots);
            }
            self.ftran(q, &mut alpha);
            let Some((p, t)) = self.ratio(lambda, dir, slope, &alpha, bland) else {
                return Err(Error::Internal("simplex ray is unbounded; the l1 objective cannot be".into()));
            };
            degenerate = if t == 0.0 { degenerate + 1 } else { 0 };
            self.pivot(p, q, dir, t, &alpha);
            pivots += 1;
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert(y)?;
            }
        }
    }

    fn result(&self, rhs: &DVector<f64>, matrix: &DMatrix<f64>, lambda: f64, pivots: usize, tol: f64) -> SolverResult {
        let (m, n) = (self.m, self.n);
        let mut estimate = DVector::zeros(n);
        let mut eq = -rhs.clone();
        let mut col = vec![0.0; m];
        for (i, &var) in self.vars.iter().enumerate() {
            if var < n {
                estimate[var] = self.values[i];
            }
            self.column(var, &mut col);
            axpy(self.values[i], &col, eq.as_mut_slice());
        }
        let objective = super::objective(matrix, rhs, lambda, &estimate);

        let mut pi = vec![0.0; m];
        self.duals(lambda, &mut pi);
        let mut g = vec![0.0; n];
        mul_transpose(self.a, m, &pi, &mut g);
        let pi_max = pi.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let g_max = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let infeasibility = (pi_max - 1.0).max(g_max / lambda - 1.0).max(0.0);
        let dual_objective = dot(&pi, rhs.as_slice()) / (1.0 + infeasibility);
        let duality_gap = (objective - dual_objective).max(0.0);
        SolverResult {
            estimate,
            objective,
            iterations: pivots,
            converged: duality_gap <= tol * objective,
            primal_residual: eq.amax() / rhs.amax().max(1.0),
            dual_residual: infeasibility,
            duality_gap,
        }
    }
}

impl PathSolver {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return invalid("matrix must be nonempty");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("matrix contains NaN or infinite values");
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Solves for every lambda in `lambdas` (any order); results follow the
    /// input order. `opts.max_iterations` caps the pivots spent per lambda and
    /// `opts.tolerance` bounds the relative duality gap reported as converged.
    pub fn solve_path(&self, rhs: &DVector<f64>, lambdas: &[f64], opts: &SolverOptions) -> Result<Vec<SolverResult>> {
        let (m, n) = self.matrix.shape();
        opts.validate()?;
        if rhs.len() != m {
            return invalid(format!("rhs has length {} but matrix has {m} rows", rhs.len()));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return invalid("rhs contains NaN or infinite values");
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return invalid(format!("lambda must be positive and finite, got {bad}"));
        }
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]));

        let y = rhs.as_slice();
        let mut basis = Basis::new(self.matrix.as_slice(), m, n, y);
        let mut results: Vec<Option<SolverResult>> = vec![None; lambdas.len()];
        for &idx in &order {
            let lambda = lambdas[idx];
            let pivots = basis.optimize(y, lambda, opts.max_iterations)?;
            results[idx] = Some(basis.result(rhs, &self.matrix, lambda, pivots, opts.tolerance));
        }
        Ok(results.into_iter().map(|r| r.expect("every lambda visited")).collect())
    }
}

/// Solves one problem by the simplex route.
pub fn solve_simplex(problem: &LassoProblem, opts: &SolverOptions) -> Result<SolverResult> {
    let solver = PathSolver::new(problem.matrix().clone())?;
    let mut out = solver.solve_path(problem.rhs(), &[problem.lambda()], opts)?;
    Ok(out.remove(0))
}
