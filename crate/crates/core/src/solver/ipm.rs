//! Primal-dual interior-point route (Mehrotra predictor-corrector).
//!
//! The problem is taken in standard form with `x = p - q` and
//! `rhs - A x = u - v`:
//!
//! ```text
//! minimize  lambda 1'(p + q) + 1'(u + v)
//! s.t.      A p - A q + u - v = rhs,   p, q, u, v >= 0
//! ```
//!
//! whose dual is `max rhs' pi` subject to `|pi| <= 1` and `|A' pi| <= lambda`.
//! Newton steps reduce to the `m x m` system `A D A' + E`, with `D` and `E`
//! diagonal. Columns whose scaling has collapsed below a relative `1e-13`
//! are left out of `A D A'`; their contribution is below rounding.
//!
//! Whatever the iterates do, the reported estimate is a point `x` whose
//! objective is evaluated exactly, and the stopping test is a duality gap
//! against the iterate's multipliers shrunk into the dual feasible set.

use nalgebra::{DMatrix, DVector};

use super::kernels::{dot, mul_transpose};
use super::{LassoProblem, SolverOptions, SolverResult};
use crate::error::{invalid, Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.995;
const DROP_RATIO: f64 = 1e-13;

/// Interior-point solver sharing one matrix across right-hand sides and lambdas.
pub struct InteriorPointSolver {
    matrix: DMatrix<f64>,
    /// Cholesky factor of `2 (A A' + I)`, used for the starting point.
    start: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// A primal point with a dual-feasible lower bound on the optimum.
#[derive(Debug, Clone)]
struct Certified {
    estimate: Vec<f64>,
    objective: f64,
    /// Multipliers before shrinking; kept to seed later lambdas.
    pi: Vec<f64>,
    dual_objective: f64,
    dual_infeasibility: f64,
}

fn amax(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
}

/// Largest step in `[0, 1]` keeping `z + t dz >= 0`.
fn max_step(z: &[f64], dz: &[f64]) -> f64 {
    let mut t = 1.0f64;
    for (zi, di) in z.iter().zip(dz) {
        if *di < 0.0 {
            t = t.min(-zi / di);
        }
    }
    t
}

impl InteriorPointSolver {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if m == 0 || matrix.ncols() == 0 {
            return invalid("matrix must be nonempty");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("matrix contains NaN or infinite values");
        }
        let kk = (&matrix * matrix.transpose() + DMatrix::identity(m, m)) * 2.0;
        let start = kk
            .cholesky()
            .ok_or_else(|| Error::Internal("2 (A A' + I) is not positive definite".into()))?;
        Ok(Self { matrix, start })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Objective at `x` and the bound from `pi` after shrinking it into
    /// `{|pi| <= 1, |A' pi| <= lambda}`.
    fn certify(&self, y: &[f64], lambda: f64, x: Vec<f64>, pi: Vec<f64>) -> Certified {
        let (m, n) = self.matrix.shape();
        let a = self.matrix.as_slice();
        let mut residual = y.to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                super::kernels::axpy(-xj, &a[j * m..(j + 1) * m], &mut residual);
            }
        }
        let objective = residual.iter().map(|v| v.abs()).sum::<f64>() + lambda * x.iter().map(|v| v.abs()).sum::<f64>();
        let mut g = vec![0.0; n];
        mul_transpose(a, m, &pi, &mut g);
        let shrink = amax(&pi).max(amax(&g) / lambda).max(1.0);
        Certified {
            estimate: x,
            objective,
            dual_objective: dot(&pi, y) / shrink,
            pi,
            dual_infeasibility: shrink - 1.0,
        }
    }

    fn gap_ok(c: &Certified, tol: f64) -> bool {
        c.objective - c.dual_objective <= tol * c.objective
    }

    fn finish(c: Certified, iterations: usize, tol: f64, primal_residual: f64) -> SolverResult {
        let duality_gap = (c.objective - c.dual_objective).max(0.0);
        SolverResult {
            converged: duality_gap <= tol * c.objective,
            estimate: DVector::from_vec(c.estimate),
            objective: c.objective,
            iterations,
            primal_residual,
            dual_residual: c.dual_infeasibility,
            duality_gap,
        }
    }

    fn check(&self, rhs: &DVector<f64>, lambda: f64, opts: &SolverOptions) -> Result<()> {
        opts.validate()?;
        let m = self.matrix.nrows();
        if rhs.len() != m {
            return invalid(format!("rhs has length {} but matrix has {m} rows", rhs.len()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be positive and finite, got {lambda}"));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return invalid("rhs contains NaN or infinite values");
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &DVector<f64>, lambda: f64, opts: &SolverOptions) -> Result<SolverResult> {
        self.check(rhs, lambda, opts)?;
        let (result, _) = self.solve_seeded(rhs.as_slice(), lambda, opts, None)?;
        Ok(result)
    }

    /// Solves for every lambda (any order); results follow the input order.
    /// Walking from large to small lambda, each point first tries the previous
    /// solution with its multipliers rescaled by the lambda ratio, which stays
    /// optimal once the fit interpolates every row.
    pub fn solve_path(&self, rhs: &DVector<f64>, lambdas: &[f64], opts: &SolverOptions) -> Result<Vec<SolverResult>> {
        for &l in lambdas {
            self.check(rhs, l, opts)?;
        }
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]));
        let mut results: Vec<Option<SolverResult>> = vec![None; lambdas.len()];
        let mut prev: Option<(f64, Certified)> = None;
        for &idx in &order {
            let lambda = lambdas[idx];
            let seed = prev.as_ref().map(|(l, c)| (lambda / l, c));
            let (result, cert) = self.solve_seeded(rhs.as_slice(), lambda, opts, seed)?;
            results[idx] = Some(result);
            prev = Some((lambda, cert));
        }
        Ok(results.into_iter().map(|r| r.expect("every lambda visited")).collect())
    }

    fn solve_seeded(
        &self,
        y: &[f64],
        lambda: f64,
        opts: &SolverOptions,
        seed: Option<(f64, &Certified)>,
    ) -> Result<(SolverResult, Certified)> {
        let n = self.matrix.ncols();
        let tol = opts.tolerance;

        // Zero is optimal when sign(rhs) is a dual certificate.
        let sign: Vec<f64> = y.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
        let zero = self.certify(y, lambda, vec![0.0; n], sign);
        if Self::gap_ok(&zero, tol) {
            return Ok((Self::finish(zero.clone(), 0, tol, 0.0), zero));
        }
        if let Some((ratio, prev)) = seed {
            let scaled: Vec<f64> = prev.pi.iter().map(|p| p * ratio).collect();
            let cand = self.certify(y, lambda, prev.estimate.clone(), scaled);
            if Self::gap_ok(&cand, tol) {
                return Ok((Self::finish(cand.clone(), 0, tol, 0.0), cand));
            }
            if let Some(x) = self.interpolate(y, &prev.estimate) {
                let cand = self.certify(y, lambda, x, cand.pi);
                if Self::gap_ok(&cand, tol) {
                    return Ok((Self::finish(cand.clone(), 0, tol, 0.0), cand));
                }
            }
        }
        self.interior_point(y, lambda, opts)
    }

    /// Exact fit of every row on the `m` largest entries of `x`, or `None`
    /// when there are fewer columns than rows or the submatrix is singular.
    fn interpolate(&self, y: &[f64], x: &[f64]) -> Option<Vec<f64>> {
        let (m, n) = self.matrix.shape();
        if n < m {
            return None;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.select_nth_unstable_by(m - 1, |&i, &j| x[j].abs().total_cmp(&x[i].abs()));
        idx.truncate(m);
        let sub = self.matrix.select_columns(&idx);
        let xs = sub.lu().solve(&DVector::from_column_slice(y))?;
        let mut out = vec![0.0; n];
        for (&j, v) in idx.iter().zip(xs.iter()) {
            out[j] = *v;
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn interior_point(&self, y: &[f64], lambda: f64, opts: &SolverOptions) -> Result<(SolverResult, Certified)> {
        let (m, n) = self.matrix.shape();
        let a = self.matrix.as_slice();
        let tol = opts.tolerance;
        let total = (2 * n + 2 * m) as f64;
        let max_iter = opts.max_iterations.min(MAX_ITERATIONS);

        // Starting point: least-norm solution of K z = y, multipliers zero,
        // shifted into the positive orthant.
        let w = self.start.solve(&DVector::from_column_slice(y));
        let mut atw = vec![0.0; n];
        mul_transpose(a, m, w.as_slice(), &mut atw);
        let mut p: Vec<f64> = atw.clone();
        let mut q: Vec<f64> = atw.iter().map(|v| -v).collect();
        let mut u: Vec<f64> = w.iter().copied().collect();
        let mut v: Vec<f64> = w.iter().map(|x| -x).collect();
        let mut pi = vec![0.0; m];
        let mut sp = vec![lambda; n];
        let mut sq = vec![lambda; n];
        let mut su = vec![1.0; m];
        let mut sv = vec![1.0; m];
        {
            let zmin = p.iter().chain(&q).chain(&u).chain(&v).fold(f64::INFINITY, |acc, e| acc.min(*e));
            let dz = (-1.5 * zmin).max(0.0);
            for z in p.iter_mut().chain(q.iter_mut()).chain(u.iter_mut()).chain(v.iter_mut()) {
                *z += dz;
            }
            let zs = dot(&p, &sp) + dot(&q, &sq) + dot(&u, &su) + dot(&v, &sv);
            let zsum: f64 = p.iter().chain(&q).chain(&u).chain(&v).sum();
            let ssum = 2.0 * n as f64 * lambda + 2.0 * m as f64;
            let (dz, ds) = (0.5 * zs / ssum, 0.5 * zs / zsum);
            for z in p.iter_mut().chain(q.iter_mut()).chain(u.iter_mut()).chain(v.iter_mut()) {
                *z += dz;
            }
            for s in sp.iter_mut().chain(sq.iter_mut()).chain(su.iter_mut()).chain(sv.iter_mut()) {
                *s += ds;
            }
        }

        let mut best: Option<Certified> = None;
        let mut best_dual = f64::NEG_INFINITY;
        let mut best_dual_pi = vec![0.0; m];
        let mut primal_residual = f64::INFINITY;
        let mut iterations = 0;

        let mut g = vec![0.0; n];
        let mut ax = vec![0.0; m];
        let (mut dp, mut dq, mut du, mut dv) = (vec![0.0; n], vec![0.0; n], vec![0.0; m], vec![0.0; m]);
        let mut rhs_pi = vec![0.0; m];
        let mut tmp_n = vec![0.0; n];
        let y_scale = 1.0 + amax(y);

        for it in 0..=max_iter {
            iterations = it;
            // Residuals.
            mul_transpose(a, m, &pi, &mut g);
            let x: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
            super::kernels::mul_skip_zeros(a, m, &x, &mut ax);
            let rp: Vec<f64> = (0..m).map(|i| y[i] - ax[i] - (u[i] - v[i])).collect();
            let rdp: Vec<f64> = (0..n).map(|j| lambda - g[j] - sp[j]).collect();
            let rdq: Vec<f64> = (0..n).map(|j| lambda + g[j] - sq[j]).collect();
            let rdu: Vec<f64> = (0..m).map(|i| 1.0 - pi[i] - su[i]).collect();
            let rdv: Vec<f64> = (0..m).map(|i| 1.0 + pi[i] - sv[i]).collect();
            primal_residual = amax(&rp) / y_scale;

            let cert = self.certify(y, lambda, x, pi.clone());
            if cert.dual_objective > best_dual {
                best_dual = cert.dual_objective;
                best_dual_pi.copy_from_slice(&pi);
            }
            if best.as_ref().is_none_or(|b| cert.objective < b.objective) {
                best = Some(cert);
            }
            let b = best.as_ref().expect("set above");
            if b.objective - best_dual <= tol * b.objective || it == max_iter {
                break;
            }

            let mu = (dot(&p, &sp) + dot(&q, &sq) + dot(&u, &su) + dot(&v, &sv)) / total;

            // Normal matrix A D A' + E.
            for j in 0..n {
                dp[j] = p[j] / sp[j];
                dq[j] = q[j] / sq[j];
            }
            for i in 0..m {
                du[i] = u[i] / su[i];
                dv[i] = v[i] / sv[i];
            }
            let dx: Vec<f64> = dp.iter().zip(&dq).map(|(a, b)| a + b).collect();
            let dmax = amax(&dx);
            let keep: Vec<usize> = (0..n).filter(|&j| dx[j] > DROP_RATIO * dmax).collect();
            let mut scaled = DMatrix::<f64>::zeros(m, keep.len());
            for (c, &j) in keep.iter().enumerate() {
                let s = dx[j].sqrt();
                for (o, av) in scaled.column_mut(c).iter_mut().zip(&a[j * m..(j + 1) * m]) {
                    *o = s * av;
                }
            }
            let mut normal = &scaled * scaled.transpose();
            for i in 0..m {
                normal[(i, i)] += du[i] + dv[i];
            }
            let chol = factor_regularized(normal)?;

            // Solves the Newton system for complementarity targets `rc`
            // (one per variable block) and returns the direction.
            let solve = |rcp: &[f64], rcq: &[f64], rcu: &[f64], rcv: &[f64], rhs_pi: &mut [f64], tmp_n: &mut [f64]| {
                // w = -S^{-1} rc + D rd, rhs = rp + K w
                let wp: Vec<f64> = (0..n).map(|j| -rcp[j] / sp[j] + dp[j] * rdp[j]).collect();
                let wq: Vec<f64> = (0..n).map(|j| -rcq[j] / sq[j] + dq[j] * rdq[j]).collect();
                for j in 0..n {
                    tmp_n[j] = wp[j] - wq[j];
                }
                super::kernels::mul_skip_zeros(a, m, tmp_n, rhs_pi);
                for i in 0..m {
                    let wu = -rcu[i] / su[i] + du[i] * rdu[i];
                    let wv = -rcv[i] / sv[i] + dv[i] * rdv[i];
                    rhs_pi[i] += rp[i] + wu - wv;
                }
                let dpi = chol.solve(&DVector::from_column_slice(rhs_pi));
                let mut atd = vec![0.0; n];
                mul_transpose(a, m, dpi.as_slice(), &mut atd);
                // ds = rd - K' dpi, dz = S^{-1} rc - D ds
                let dsp: Vec<f64> = (0..n).map(|j| rdp[j] - atd[j]).collect();
                let dsq: Vec<f64> = (0..n).map(|j| rdq[j] + atd[j]).collect();
                let dsu: Vec<f64> = (0..m).map(|i| rdu[i] - dpi[i]).collect();
                let dsv: Vec<f64> = (0..m).map(|i| rdv[i] + dpi[i]).collect();
                let dzp: Vec<f64> = (0..n).map(|j| rcp[j] / sp[j] - dp[j] * dsp[j]).collect();
                let dzq: Vec<f64> = (0..n).map(|j| rcq[j] / sq[j] - dq[j] * dsq[j]).collect();
                let dzu: Vec<f64> = (0..m).map(|i| rcu[i] / su[i] - du[i] * dsu[i]).collect();
                let dzv: Vec<f64> = (0..m).map(|i| rcv[i] / sv[i] - dv[i] * dsv[i]).collect();
                Direction {
                    p: dzp,
                    q: dzq,
                    u: dzu,
                    v: dzv,
                    pi: dpi.as_slice().to_vec(),
                    sp: dsp,
                    sq: dsq,
                    su: dsu,
                    sv: dsv,
                }
            };

            // Predictor.
            let neg = |z: &[f64], s: &[f64]| -> Vec<f64> { z.iter().zip(s).map(|(a, b)| -a * b).collect() };
            let aff = solve(&neg(&p, &sp), &neg(&q, &sq), &neg(&u, &su), &neg(&v, &sv), &mut rhs_pi, &mut tmp_n);
            let (ap, ad) = aff.steps(&p, &q, &u, &v, &sp, &sq, &su, &sv);
            let mu_aff = {
                let f = |z: &[f64], dz: &[f64], s: &[f64], ds: &[f64]| -> f64 {
                    z.iter().zip(dz).zip(s.iter().zip(ds)).map(|((z, dz), (s, ds))| (z + ap * dz) * (s + ad * ds)).sum()
                };
                (f(&p, &aff.p, &sp, &aff.sp) + f(&q, &aff.q, &sq, &aff.sq) + f(&u, &aff.u, &su, &aff.su) + f(&v, &aff.v, &sv, &aff.sv))
                    / total
            };
            let sigma = (mu_aff / mu).powi(3).min(1.0);

            // Corrector with centering.
            let target = |z: &[f64], s: &[f64], dz: &[f64], ds: &[f64]| -> Vec<f64> {
                (0..z.len()).map(|k| sigma * mu - z[k] * s[k] - dz[k] * ds[k]).collect()
            };
            let dir = solve(
                &target(&p, &sp, &aff.p, &aff.sp),
                &target(&q, &sq, &aff.q, &aff.sq),
                &target(&u, &su, &aff.u, &aff.su),
                &target(&v, &sv, &aff.v, &aff.sv),
                &mut rhs_pi,
                &mut tmp_n,
            );
            let (ap, ad) = dir.steps(&p, &q, &u, &v, &sp, &sq, &su, &sv);
            let (ap, ad) = ((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0));
            let upd = |z: &mut [f64], dz: &[f64], t: f64| z.iter_mut().zip(dz).for_each(|(z, d)| *z += t * d);
            upd(&mut p, &dir.p, ap);
            upd(&mut q, &dir.q, ap);
            upd(&mut u, &dir.u, ap);
            upd(&mut v, &dir.v, ap);
            upd(&mut pi, &dir.pi, ad);
            upd(&mut sp, &dir.sp, ad);
            upd(&mut sq, &dir.sq, ad);
            upd(&mut su, &dir.su, ad);
            upd(&mut sv, &dir.sv, ad);
        }

        // Report the best primal point against the best bound seen.
        let mut cert = best.expect("at least one iterate");
        if best_dual > cert.dual_objective {
            cert.dual_objective = best_dual;
            cert.pi = best_dual_pi;
        }
        Ok((Self::finish(cert.clone(), iterations, tol, primal_residual), cert))
    }
}

struct Direction {
    p: Vec<f64>,
    q: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    pi: Vec<f64>,
    sp: Vec<f64>,
    sq: Vec<f64>,
    su: Vec<f64>,
    sv: Vec<f64>,
}

impl Direction {
    #[allow(clippy::too_many_arguments)]
    fn steps(&self, p: &[f64], q: &[f64], u: &[f64], v: &[f64], sp: &[f64], sq: &[f64], su: &[f64], sv: &[f64]) -> (f64, f64) {
        let ap = max_step(p, &self.p).min(max_step(q, &self.q)).min(max_step(u, &self.u)).min(max_step(v, &self.v));
        let ad = max_step(sp, &self.sp).min(max_step(sq, &self.sq)).min(max_step(su, &self.su)).min(max_step(sv, &self.sv));
        (ap, ad)
    }
}

/// Cholesky with a growing diagonal shift when the normal matrix has lost
/// definiteness to rounding.
fn factor_regularized(normal: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = normal.nrows();
    let scale = (0..m).fold(0.0f64, |acc, i| acc.max(normal[(i, i)]));
    let mut shift = 0.0;
    for _ in 0..8 {
        let mut trial = normal.clone();
        for i in 0..m {
            trial[(i, i)] += shift;
        }
        if let Some(c) = trial.cholesky() {
            return Ok(c);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(Error::Internal("interior-point normal matrix is not positive definite".into()))
}

/// Solves one problem by the interior-point route.
pub fn solve_interior_point(problem: &LassoProblem, opts: &SolverOptions) -> Result<SolverResult> {
    InteriorPointSolver::new(problem.matrix().clone())?.solve(problem.rhs(), problem.lambda(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::lp_oracle;

    fn instance(m: usize, n: usize, k: usize) -> (DMatrix<f64>, DVector<f64>) {
        let a = DMatrix::from_fn(m, n, |i, j| ((((i + 1) * (j + 3) * (k + 7)) % 23) as f64 - 11.0) / 7.0);
        let y = DVector::from_fn(m, |i, _| ((i + k) as f64 * 0.9).sin() * 4.0 + if i == k % m { 40.0 } else { 0.0 });
        (a, y)
    }

    #[test]
    fn matches_lp_oracle() {
        let opts = SolverOptions::default();
        for k in 0..6 {
            let (a, y) = instance(8, 15, k);
            for lambda in [0.01, 0.1, 1.0] {
                let p = LassoProblem::new(a.clone(), y.clone(), lambda).unwrap();
                let exact = lp_oracle(&p).unwrap().objective;
                let r = solve_interior_point(&p, &opts).unwrap();
                assert!(r.converged, "k={k} lambda={lambda}");
                assert!((r.objective - exact).abs() <= 1e-6 * exact, "k={k} lambda={lambda}: {} vs {exact}", r.objective);
                assert!((p.objective(&r.estimate) - r.objective).abs() <= 1e-9 * exact);
            }
        }
    }

    #[test]
    fn large_lambda_is_screened_to_zero() {
        let (a, y) = instance(5, 9, 1);
        let p = LassoProblem::new(a, y.clone(), 1e4).unwrap();
        let r = solve_interior_point(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.estimate.iter().all(|v| *v == 0.0));
        assert_eq!(r.objective, y.lp_norm(1));
    }

    #[test]
    fn identity_interpolates() {
        let p = LassoProblem::new(DMatrix::identity(2, 2), DVector::from_vec(vec![3.0, -3.0]), 0.5).unwrap();
        let r = solve_interior_point(&p, &SolverOptions::default()).unwrap();
        assert!((r.objective - 3.0).abs() < 1e-6);
        assert!((r.estimate[0] - 3.0).abs() < 1e-5 && (r.estimate[1] + 3.0).abs() < 1e-5);
    }

    #[test]
    fn path_agrees_with_independent_solves() {
        let (a, y) = instance(10, 25, 3);
        let lambdas = [0.001, 1.0, 0.01, 10.0, 0.1];
        let opts = SolverOptions::default();
        let solver = InteriorPointSolver::new(a).unwrap();
        let path = solver.solve_path(&y, &lambdas, &opts).unwrap();
        for (l, r) in lambdas.iter().zip(&path) {
            let single = solver.solve(&y, *l, &opts).unwrap();
            assert!(r.converged);
            assert!((r.objective - single.objective).abs() <= 2e-7 * single.objective, "lambda={l}");
        }
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let (a, y) = instance(8, 15, 2);
        let opts = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        let r = InteriorPointSolver::new(a).unwrap().solve(&y, 0.1, &opts).unwrap();
        assert!(!r.converged);
        assert!(r.duality_gap > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let solver = InteriorPointSolver::new(DMatrix::identity(2, 2)).unwrap();
        let opts = SolverOptions::default();
        assert!(solver.solve(&DVector::zeros(3), 1.0, &opts).is_err());
        assert!(solver.solve_path(&DVector::zeros(2), &[1.0, -1.0], &opts).is_err());
        assert!(InteriorPointSolver::new(DMatrix::from_element(1, 1, f64::NAN)).is_err());
    }
}
