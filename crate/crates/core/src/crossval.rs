//! Holdout splits, l1/l2 holdout errors and lambda selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{MeasurementSet, SparseSignal};
use crate::rng::rng_from_seed;
use crate::solver::{recovery_error_of, solve_grid, SolverKind, SolverOptions};

/// Partition of the measurement rows into recovery and holdout sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    recovery_rows: Vec<usize>,
    holdout_rows: Vec<usize>,
}

impl CvSplit {
    /// Checks that the two sets partition `0..m`; both are stored sorted.
    pub fn new(mut recovery_rows: Vec<usize>, mut holdout_rows: Vec<usize>, m: usize) -> Result<Self> {
        recovery_rows.sort_unstable();
        holdout_rows.sort_unstable();
        if recovery_rows.is_empty() || holdout_rows.is_empty() {
            return invalid("both recovery and holdout sets must be nonempty");
        }
        let mut seen = vec![false; m];
        for &i in recovery_rows.iter().chain(&holdout_rows) {
            if i >= m {
                return invalid(format!("row {i} out of range for m = {m}"));
            }
            if seen[i] {
                return invalid(format!("row {i} appears twice"));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return invalid("split does not cover every row");
        }
        Ok(Self {
            recovery_rows,
            holdout_rows,
        })
    }

    pub fn recovery_rows(&self) -> &[usize] {
        &self.recovery_rows
    }

    pub fn holdout_rows(&self) -> &[usize] {
        &self.holdout_rows
    }

    pub fn m(&self) -> usize {
        self.recovery_rows.len() + self.holdout_rows.len()
    }

    pub fn m_cv(&self) -> usize {
        self.holdout_rows.len()
    }
}

/// Draws `m_cv` holdout rows uniformly without replacement.
pub fn make_split(m: usize, m_cv: usize, seed: u64) -> Result<CvSplit> {
    if m_cv == 0 || m_cv >= m {
        return invalid(format!("need 0 < m_cv < m, got m_cv = {m_cv}, m = {m}"));
    }
    let mut rng = rng_from_seed(seed);
    let holdout = rand::seq::index::sample(&mut rng, m, m_cv).into_vec();
    let mut is_holdout = vec![false; m];
    for &i in &holdout {
        is_holdout[i] = true;
    }
    let recovery = (0..m).filter(|&i| !is_holdout[i]).collect();
    CvSplit::new(recovery, holdout, m)
}

/// Candidate regularization values, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for LambdaGrid {
    type Error = crate::error::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<LambdaGrid> for Vec<f64> {
    fn from(g: LambdaGrid) -> Self {
        g.values
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self::decades(-3, 4)
    }
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("lambda grid must be nonempty");
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid("lambda values must be positive and finite");
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("lambda grid must be strictly increasing");
        }
        Ok(Self { values })
    }

    /// `10^lo, 10^(lo+1), ..., 10^hi`.
    pub fn decades(lo: i32, hi: i32) -> Self {
        let values = (lo..=hi).map(|k| 10f64.powi(k)).collect();
        Self::new(values).expect("powers of ten are increasing")
    }

    /// Inserts `per_step - 1` log-spaced points between each pair of
    /// neighbours; `per_step = 1` returns the grid unchanged.
    pub fn densify(&self, per_step: usize) -> Result<Self> {
        if per_step == 0 {
            return invalid("densify factor must be positive");
        }
        let mut values = Vec::with_capacity((self.values.len() - 1) * per_step + 1);
        for w in self.values.windows(2) {
            let ratio = (w[1] / w[0]).ln() / per_step as f64;
            for k in 0..per_step {
                values.push(w[0] * (ratio * k as f64).exp());
            }
        }
        values.push(*self.values.last().expect("nonempty"));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `holdout_rhs - holdout_matrix * estimate`.
pub fn holdout_residual(holdout_rhs: &DVector<f64>, holdout_matrix: &DMatrix<f64>, estimate: &DVector<f64>) -> Result<DVector<f64>> {
    if holdout_matrix.nrows() != holdout_rhs.len() || holdout_matrix.ncols() != estimate.len() {
        return invalid(format!(
            "holdout matrix is {}x{}, rhs has {} entries, estimate has {}",
            holdout_matrix.nrows(),
            holdout_matrix.ncols(),
            holdout_rhs.len(),
            estimate.len()
        ));
    }
    Ok(holdout_rhs - holdout_matrix * estimate)
}

pub fn cv_error_l1(holdout_rhs: &DVector<f64>, holdout_matrix: &DMatrix<f64>, estimate: &DVector<f64>) -> Result<f64> {
    Ok(holdout_residual(holdout_rhs, holdout_matrix, estimate)?.lp_norm(1))
}

pub fn cv_error_l2(holdout_rhs: &DVector<f64>, holdout_matrix: &DMatrix<f64>, estimate: &DVector<f64>) -> Result<f64> {
    Ok(holdout_residual(holdout_rhs, holdout_matrix, estimate)?.norm())
}

/// One lambda of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRecord {
    pub lambda: f64,
    pub estimate: DVector<f64>,
    pub eps_cv_l1: f64,
    pub eps_cv_l2: f64,
    /// `||x - estimate||_2`.
    pub eps_x: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub per_lambda: Vec<LambdaRecord>,
    pub chosen_l1: usize,
    pub chosen_l2: usize,
    pub chosen_oracle: usize,
}

impl SweepResult {
    pub fn from_records(per_lambda: Vec<LambdaRecord>) -> Result<Self> {
        if per_lambda.is_empty() {
            return invalid("sweep has no lambdas");
        }
        Ok(Self {
            chosen_l1: argmin(per_lambda.iter().map(|r| r.eps_cv_l1)),
            chosen_l2: argmin(per_lambda.iter().map(|r| r.eps_cv_l2)),
            chosen_oracle: argmin(per_lambda.iter().map(|r| r.eps_x)),
            per_lambda,
        })
    }

    pub fn nonconverged(&self) -> usize {
        self.per_lambda.iter().filter(|r| !r.converged).count()
    }
}

/// First index of the minimum; with an increasing grid, ties go to the smallest lambda.
fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Solves on the recovery rows for every lambda and scores each estimate on
/// the holdout rows and against the true signal.
pub fn sweep_lambda(
    measurements: &MeasurementSet,
    split: &CvSplit,
    grid: &LambdaGrid,
    signal: &SparseSignal,
    solver: SolverKind,
    opts: &SolverOptions,
) -> Result<SweepResult> {
    if split.m() != measurements.rows() {
        return invalid(format!("split covers {} rows but there are {} measurements", split.m(), measurements.rows()));
    }
    let rec = split.recovery_rows();
    let hold = split.holdout_rows();
    let a_rec = measurements.matrix.select_rows(rec);
    let y_rec = DVector::from_iterator(rec.len(), rec.iter().map(|&i| measurements.noisy[i]));
    let a_cv = measurements.matrix.select_rows(hold);
    let y_cv = DVector::from_iterator(hold.len(), hold.iter().map(|&i| measurements.noisy[i]));

    let results = solve_grid(solver, a_rec, &y_rec, grid.values(), opts)?;
    let mut per_lambda = Vec::with_capacity(grid.len());
    for (&lambda, r) in grid.values().iter().zip(results) {
        // Both norms come from one stored residual.
        let residual = holdout_residual(&y_cv, &a_cv, &r.estimate)?;
        per_lambda.push(LambdaRecord {
            lambda,
            eps_cv_l1: residual.lp_norm(1),
            eps_cv_l2: residual.norm(),
            eps_x: recovery_error_of(signal, &r.estimate)?,
            estimate: r.estimate,
            converged: r.converged,
        });
    }
    SweepResult::from_records(per_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_noise, gen_sensing_matrix, gen_sparse_signal, measure, NoiseParams};
    use proptest::prelude::*;

    #[test]
    fn split_sizes() {
        let s = make_split(420, 20, 1).unwrap();
        assert_eq!((s.recovery_rows().len(), s.m_cv(), s.m()), (400, 20, 420));
        let s = make_split(2, 1, 5).unwrap();
        assert_eq!(s.m_cv(), 1);
        let s = make_split(800, 400, 9).unwrap();
        assert_eq!(s.recovery_rows().len(), s.holdout_rows().len());
        assert!(make_split(5, 5, 0).is_err());
        assert!(make_split(5, 0, 0).is_err());
        assert_eq!(make_split(50, 7, 3).unwrap(), make_split(50, 7, 3).unwrap());
    }

    #[test]
    fn split_validation() {
        assert!(CvSplit::new(vec![0, 1], vec![1], 3).is_err());
        assert!(CvSplit::new(vec![0], vec![1], 3).is_err());
        assert!(CvSplit::new(vec![0, 3], vec![1], 3).is_err());
        assert!(CvSplit::new(vec![2, 0], vec![1], 3).is_ok());
    }

    #[test]
    fn cv_errors_by_hand() {
        let a = DMatrix::<f64>::identity(3, 3);
        let zero = DVector::zeros(3);
        let y = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(cv_error_l1(&y, &a, &zero).unwrap(), 6.0);
        let y2 = DVector::from_vec(vec![3.0, 4.0]);
        let a2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(cv_error_l2(&y2, &a2, &DVector::zeros(2)).unwrap(), 5.0);
        assert_eq!(cv_error_l2(&y2, &a2, &y2).unwrap(), 0.0);
        assert!(cv_error_l1(&y, &a, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn grid_construction() {
        let g = LambdaGrid::default();
        assert_eq!(g.values(), &[0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0]);
        let d = g.densify(4).unwrap();
        assert_eq!(d.len(), 7 * 4 + 1);
        assert!((d.values()[2] - 0.001 * 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.densify(1).unwrap(), g);
        assert!(LambdaGrid::new(vec![1.0, 1.0]).is_err());
        assert!(LambdaGrid::new(vec![0.0, 1.0]).is_err());
        assert!(serde_json::from_str::<LambdaGrid>("[2.0, 1.0]").is_err());
        let back: LambdaGrid = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    fn record(lambda: f64, l1: f64, l2: f64, ex: f64) -> LambdaRecord {
        LambdaRecord {
            lambda,
            estimate: DVector::zeros(1),
            eps_cv_l1: l1,
            eps_cv_l2: l2,
            eps_x: ex,
            converged: true,
        }
    }

    #[test]
    fn ties_go_to_smallest_lambda() {
        let s = SweepResult::from_records(vec![record(0.1, 2.0, 3.0, 1.0), record(1.0, 1.0, 3.0, 1.0), record(10.0, 1.0, 2.0, 1.0)]).unwrap();
        assert_eq!((s.chosen_l1, s.chosen_l2, s.chosen_oracle), (1, 2, 0));
        let single = SweepResult::from_records(vec![record(1.0, 5.0, 4.0, 3.0)]).unwrap();
        assert_eq!((single.chosen_l1, single.chosen_l2, single.chosen_oracle), (0, 0, 0));
    }

    fn small_instance(b: f64, sigma_n: f64, seed: u64) -> (SparseSignal, MeasurementSet) {
        let x = gen_sparse_signal(60, 4, 3.0, seed).unwrap();
        let a = gen_sensing_matrix(40, 60, seed + 1).unwrap();
        let np = NoiseParams {
            b,
            mu_g: 700.0,
            sigma_g: 100.0,
            sigma_n,
        };
        let noise = gen_noise(40, &np, seed + 2).unwrap();
        let ms = measure(&x, &a, &noise).unwrap();
        (x, ms)
    }

    #[test]
    fn noiseless_oracle_recovers() {
        let (x, ms) = small_instance(0.0, 0.0, 4);
        let split = make_split(40, 8, 4).unwrap();
        let grid = LambdaGrid::new(vec![1e-4, 1.0, 100.0]).unwrap();
        let s = sweep_lambda(&ms, &split, &grid, &x, SolverKind::InteriorPoint, &SolverOptions::default()).unwrap();
        let best = &s.per_lambda[s.chosen_oracle];
        assert!(best.eps_x < 1e-4 * x.norm(), "eps_x = {}", best.eps_x);
        // With no noise, an exact estimate leaves nothing on the holdout.
        assert!(best.eps_cv_l1 < 1e-3);
        assert_eq!(s.nonconverged(), 0);
    }

    #[test]
    fn holdout_permutation_leaves_estimates_unchanged() {
        let (x, ms) = small_instance(0.1, 0.5, 7);
        let split = make_split(40, 8, 2).unwrap();
        let grid = LambdaGrid::new(vec![0.1, 1.0]).unwrap();
        let opts = SolverOptions::default();
        let base = sweep_lambda(&ms, &split, &grid, &x, SolverKind::InteriorPoint, &opts).unwrap();
        // Swap the matrix rows and rhs entries of two holdout rows.
        let (h0, h1) = (split.holdout_rows()[0], split.holdout_rows()[3]);
        let mut swapped = ms.clone();
        let mut entries = swapped.matrix.entries().clone();
        entries.swap_rows(h0, h1);
        swapped.matrix = crate::model::SensingMatrix::new(entries).unwrap();
        swapped.noisy.swap_rows(h0, h1);
        let perm = sweep_lambda(&swapped, &split, &grid, &x, SolverKind::InteriorPoint, &opts).unwrap();
        for (a, b) in base.per_lambda.iter().zip(&perm.per_lambda) {
            assert_eq!(a.estimate, b.estimate);
            assert!((a.eps_cv_l1 - b.eps_cv_l1).abs() <= 1e-12 * a.eps_cv_l1);
        }
    }

    proptest! {
        #[test]
        fn norm_equivalence(res in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let k = res.len();
            let y = DVector::from_vec(res);
            let a = DMatrix::<f64>::zeros(k, 2);
            let z = DVector::zeros(2);
            let l1 = cv_error_l1(&y, &a, &z).unwrap();
            let l2 = cv_error_l2(&y, &a, &z).unwrap();
            prop_assert!(l2 <= l1 * (1.0 + 1e-12));
            prop_assert!(l1 <= (k as f64).sqrt() * l2 * (1.0 + 1e-12));
        }

        #[test]
        fn split_partitions(m in 2usize..300, frac in 0.0f64..1.0, seed in any::<u64>()) {
            let m_cv = 1 + ((m - 2) as f64 * frac) as usize;
            let s = make_split(m, m_cv, seed).unwrap();
            let mut all: Vec<usize> = s.recovery_rows().iter().chain(s.holdout_rows()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
            prop_assert_eq!(s.m_cv(), m_cv);
        }
    }
}
