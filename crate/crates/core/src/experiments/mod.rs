//! Monte Carlo harness for the six figure scenarios.
//!
//! A scenario is a list of sweep points, each with a number of independent
//! trials. Every trial draws from streams seeded by
//! `(config seed, point index, trial index)` and runs single-threaded, so
//! records are identical at any rayon parallelism. Aggregates are folds over
//! trials in index order.

mod bounds;
mod distribution;
mod ordering;
mod output;
mod selection;
pub mod stats;

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::crossval::{make_split, CvSplit, LambdaGrid};
use crate::error::{Error, Result};
use crate::model::{gen_noise, gen_sensing_matrix, gen_sparse_signal, measure, MeasurementSet, NoiseParams, SparseSignal};
use crate::rng::{derive_seed, stream_seed, Stream};
use crate::solver::{SolverKind, SolverOptions};

pub use bounds::{BoundTrial, BoundsOutcome};
pub use distribution::{draw_holdout_l1, SamplesOutcome};
pub use ordering::{OrderingBin, OrderingOutcome, OrderingPair, TheoryCurvePoint};
pub use output::{csv_path, json_path, read_record, write_outputs, CSV_COLUMNS};
pub use selection::SelectionTrial;
pub use stats::{ks_statistic, MeanSe};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig1RmseVsB,
    Fig2RmseVsSigmaN,
    Fig3Lemma1Pdf,
    Fig4Theorem1Bounds,
    Fig5Lemma2Pdf,
    Fig6Theorem2Prob,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Fig1RmseVsB,
        Scenario::Fig2RmseVsSigmaN,
        Scenario::Fig3Lemma1Pdf,
        Scenario::Fig4Theorem1Bounds,
        Scenario::Fig5Lemma2Pdf,
        Scenario::Fig6Theorem2Prob,
        Scenario::Custom,
    ];

    /// Short name used for output files and CLI subcommands.
    pub fn short_name(self) -> &'static str {
        match self {
            Scenario::Fig1RmseVsB => "fig1",
            Scenario::Fig2RmseVsSigmaN => "fig2",
            Scenario::Fig3Lemma1Pdf => "fig3",
            Scenario::Fig4Theorem1Bounds => "fig4",
            Scenario::Fig5Lemma2Pdf => "fig5",
            Scenario::Fig6Theorem2Prob => "fig6",
            Scenario::Custom => "custom",
        }
    }
}

/// Parameter varied across the points of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    B,
    SigmaN,
    MCv,
}

/// Fully resolved scenario description; stored verbatim in every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    /// Signal length.
    pub n: usize,
    /// Total measurements, recovery plus holdout.
    pub m: usize,
    pub m_cv: usize,
    /// Nonzeros in the signal.
    pub s: usize,
    /// Standard deviation of the nonzero amplitudes.
    pub amp_sigma: f64,
    pub noise: NoiseParams,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    /// Trials per point. Figs. 3 and 5 count holdout realizations; Fig. 6
    /// counts problem instances.
    pub trials: usize,
    pub lambda_grid: LambdaGrid,
    pub seed: u64,
    pub solver: SolverKind,
    pub solver_options: SolverOptions,
    /// Fixed lambda of the estimate in Figs. 3 and 4, and of the
    /// smaller-error estimate in Fig. 5.
    pub lambda: f64,
    /// Lambda of the second estimate in Fig. 5.
    pub lambda_alt: f64,
    /// Interval multiplier for Fig. 4.
    pub rho: f64,
    /// Holdout realizations per estimate pair in Fig. 6.
    pub pair_realizations: usize,
    /// Bin edges on the relative recovery-error gap for Fig. 6.
    pub bin_edges: Vec<f64>,
    /// A scenario fails when more than this fraction of trials is excluded.
    pub max_excluded_fraction: f64,
}

fn key_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{key}: {msg}"))
}

impl ExperimentConfig {
    /// Parameters from the figure captions at desk-scale trial counts.
    pub fn defaults(scenario: Scenario) -> Self {
        let base = Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            n: 1200,
            m: 420,
            m_cv: 20,
            s: 50,
            amp_sigma: 10f64.sqrt(),
            noise: NoiseParams {
                b: 0.05,
                mu_g: 700.0,
                sigma_g: 100.0,
                sigma_n: 0.5,
            },
            sweep_axis: SweepAxis::B,
            sweep_values: vec![0.05],
            trials: 200,
            lambda_grid: LambdaGrid::default(),
            seed: 1,
            solver: SolverKind::InteriorPoint,
            solver_options: SolverOptions::default(),
            lambda: 1.0,
            lambda_alt: 10.0,
            rho: 3.0,
            pair_realizations: 400,
            bin_edges: vec![0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 1e6],
            max_excluded_fraction: 0.01,
        };
        match scenario {
            Scenario::Fig1RmseVsB => Self {
                sweep_values: (1..=10).map(|k| k as f64 / 100.0).collect(),
                ..base
            },
            Scenario::Fig2RmseVsSigmaN => Self {
                amp_sigma: 10.0,
                noise: NoiseParams { b: 0.02, ..base.noise },
                sweep_axis: SweepAxis::SigmaN,
                sweep_values: vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0],
                ..base
            },
            Scenario::Fig3Lemma1Pdf => Self {
                m: 800,
                m_cv: 400,
                noise: NoiseParams { b: 0.1, ..base.noise },
                sweep_axis: SweepAxis::MCv,
                sweep_values: vec![400.0],
                trials: 10_000,
                ..base
            },
            Scenario::Fig4Theorem1Bounds => Self {
                noise: NoiseParams { b: 0.1, ..base.noise },
                sweep_axis: SweepAxis::MCv,
                sweep_values: vec![40.0, 80.0, 120.0, 160.0, 200.0],
                trials: 1000,
                ..base
            },
            Scenario::Fig5Lemma2Pdf => Self {
                m: 440,
                m_cv: 40,
                noise: NoiseParams { b: 0.1, ..base.noise },
                sweep_axis: SweepAxis::MCv,
                sweep_values: vec![40.0],
                trials: 10_000,
                ..base
            },
            Scenario::Fig6Theorem2Prob => Self {
                noise: NoiseParams {
                    b: 0.05,
                    mu_g: 1000.0,
                    sigma_g: 20.0,
                    sigma_n: 0.5,
                },
                sweep_axis: SweepAxis::MCv,
                sweep_values: vec![20.0],
                trials: 20,
                lambda_grid: LambdaGrid::decades(-2, 2).densify(4).expect("valid factor"),
                ..base
            },
            Scenario::Custom => Self { trials: 50, ..base },
        }
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(key_error("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        if self.n == 0 {
            return Err(key_error("n", "must be positive"));
        }
        if self.s == 0 || self.s > self.n {
            return Err(key_error("s", format!("must lie in 1..={}, got {}", self.n, self.s)));
        }
        if !(self.amp_sigma > 0.0 && self.amp_sigma.is_finite()) {
            return Err(key_error("amp_sigma", "must be positive"));
        }
        if self.m < 2 {
            return Err(key_error("m", "must be at least 2"));
        }
        if self.m_cv == 0 || self.m_cv >= self.m {
            return Err(key_error("m_cv", format!("must satisfy 0 < m_cv < m = {}, got {}", self.m, self.m_cv)));
        }
        self.noise.validate().map_err(|e| key_error("noise", e))?;
        if self.sweep_values.is_empty() {
            return Err(key_error("sweep_values", "must be nonempty"));
        }
        for &v in &self.sweep_values {
            let ok = match self.sweep_axis {
                SweepAxis::B => (0.0..=1.0).contains(&v),
                SweepAxis::SigmaN => v >= 0.0 && v.is_finite(),
                SweepAxis::MCv => v >= 1.0 && v.fract() == 0.0 && (v as usize) < self.m,
            };
            if !ok {
                return Err(key_error("sweep_values", format!("{v} is not valid on axis {:?} (m = {})", self.sweep_axis, self.m)));
            }
        }
        if self.trials == 0 {
            return Err(key_error("trials", "must be positive"));
        }
        self.solver_options.validate().map_err(|e| key_error("solver_options", e))?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(key_error("lambda", "must be positive"));
        }
        if !(self.lambda_alt > 0.0 && self.lambda_alt.is_finite()) {
            return Err(key_error("lambda_alt", "must be positive"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(key_error("rho", "must be positive"));
        }
        if self.pair_realizations == 0 {
            return Err(key_error("pair_realizations", "must be positive"));
        }
        if self.bin_edges.len() < 2 || self.bin_edges.windows(2).any(|w| w[1] <= w[0]) || self.bin_edges[0] < 0.0 {
            return Err(key_error("bin_edges", "need at least two nonnegative, strictly increasing edges"));
        }
        if !(0.0..=1.0).contains(&self.max_excluded_fraction) {
            return Err(key_error("max_excluded_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Model parameters at one sweep value.
    pub fn point(&self, value: f64) -> PointParams {
        let mut p = PointParams {
            noise: self.noise,
            m_cv: self.m_cv,
        };
        match self.sweep_axis {
            SweepAxis::B => p.noise.b = value,
            SweepAxis::SigmaN => p.noise.sigma_n = value,
            SweepAxis::MCv => p.m_cv = value as usize,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub noise: NoiseParams,
    pub m_cv: usize,
}

/// A signal, its measurements and a recovery/holdout split.
#[derive(Debug, Clone)]
pub struct Instance {
    pub signal: SparseSignal,
    pub measurements: MeasurementSet,
    pub split: CvSplit,
}

impl Instance {
    /// The instance behind trial `trial` at point `point` of a sweep.
    pub fn for_trial(config: &ExperimentConfig, point: usize, trial: usize) -> Result<Self> {
        let value = *config
            .sweep_values
            .get(point)
            .ok_or_else(|| key_error("sweep_values", format!("no point {point}")))?;
        Self::draw(config, &config.point(value), task_seed(config.seed, point, trial))
    }

    pub fn draw(config: &ExperimentConfig, point: &PointParams, seed: u64) -> Result<Self> {
        let signal = gen_sparse_signal(config.n, config.s, config.amp_sigma, stream_seed(seed, Stream::Signal, 0))?;
        let matrix = gen_sensing_matrix(config.m, config.n, stream_seed(seed, Stream::Matrix, 0))?;
        let noise = gen_noise(config.m, &point.noise, stream_seed(seed, Stream::Noise, 0))?;
        let split = make_split(config.m, point.m_cv, stream_seed(seed, Stream::Split, 0))?;
        let measurements = measure(&signal, &matrix, &noise)?;
        Ok(Self {
            signal,
            measurements,
            split,
        })
    }

    fn rows(&self, rows: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let a = self.measurements.matrix.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.measurements.noisy[i]));
        (a, y)
    }

    pub fn recovery(&self) -> (DMatrix<f64>, DVector<f64>) {
        self.rows(self.split.recovery_rows())
    }

    pub fn holdout(&self) -> (DMatrix<f64>, DVector<f64>) {
        self.rows(self.split.holdout_rows())
    }
}

/// One row of the per-scenario CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sweep_value: f64,
    pub criterion: String,
    pub mean: f64,
    pub std_error: Option<f64>,
    pub n: usize,
}

impl Aggregate {
    fn from_values(sweep_value: f64, criterion: &str, values: &[f64]) -> Option<Self> {
        let s = stats::mean_se(values);
        (s.n > 0).then(|| Aggregate {
            sweep_value,
            criterion: criterion.to_string(),
            mean: s.mean,
            std_error: s.std_error,
            n: s.n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub reason: String,
}

/// Per-trial outputs of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointOutcome {
    Selection { trials: Vec<SelectionTrial> },
    Samples(SamplesOutcome),
    Bounds(BoundsOutcome),
    Ordering(OrderingOutcome),
    /// The closed form does not apply at this point; no trials were run.
    Regime { reason: String, min_m_cv: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub sweep_value: f64,
    pub outcome: PointOutcome,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<Aggregate>,
}

impl PointRecord {
    fn new(sweep_value: f64, outcome: PointOutcome, failures: Vec<TrialFailure>) -> Self {
        let aggregates = aggregate(sweep_value, &outcome);
        Self {
            sweep_value,
            outcome,
            failures,
            aggregates,
        }
    }
}

/// Recomputes the CSV rows of a point from its per-trial outputs.
pub fn aggregate(sweep_value: f64, outcome: &PointOutcome) -> Vec<Aggregate> {
    match outcome {
        PointOutcome::Selection { trials } => selection::aggregate(sweep_value, trials),
        PointOutcome::Samples(s) => s.aggregate(sweep_value),
        PointOutcome::Bounds(b) => b.aggregate(sweep_value),
        PointOutcome::Ordering(o) => o.aggregate(),
        PointOutcome::Regime { .. } => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub config: ExperimentConfig,
    pub points: Vec<PointRecord>,
    pub total_trials: usize,
    pub excluded_trials: usize,
    /// More than `max_excluded_fraction` of trials were excluded.
    pub threshold_tripped: bool,
}

impl ExperimentRecord {
    fn assemble(config: &ExperimentConfig, points: Vec<PointRecord>, total_trials: usize) -> Self {
        let excluded_trials = points.iter().map(|p| p.failures.len()).sum();
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: config.scenario,
            config: config.clone(),
            threshold_tripped: excluded_trials as f64 > config.max_excluded_fraction * total_trials as f64,
            points,
            total_trials,
            excluded_trials,
        }
    }

    /// Errors when the exclusion threshold was exceeded.
    pub fn check(&self) -> Result<()> {
        if self.threshold_tripped {
            return Err(Error::Scenario(format!(
                "{} of {} trials excluded, above the allowed fraction {}",
                self.excluded_trials, self.total_trials, self.config.max_excluded_fraction
            )));
        }
        Ok(())
    }
}

/// Callback receiving `(finished, total)` task counts.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// Seed of trial `trial` at point `point`.
pub fn task_seed(seed: u64, point: usize, trial: usize) -> u64 {
    derive_seed(seed, &[Stream::Point as u64, point as u64, Stream::Trial as u64, trial as u64])
}

/// Seed for quantities shared by all trials of a point.
pub fn point_seed(seed: u64, point: usize) -> u64 {
    derive_seed(seed, &[Stream::Point as u64, point as u64])
}

/// Runs `f` for every `(point, trial)` pair on the current rayon pool and
/// returns results grouped by point in trial order.
fn run_tasks<T: Send>(
    trials_per_point: &[usize],
    progress: Option<Progress<'_>>,
    f: impl Fn(usize, usize) -> Result<T> + Sync,
) -> Vec<Vec<Result<T>>> {
    let tasks: Vec<(usize, usize)> = trials_per_point
        .iter()
        .enumerate()
        .flat_map(|(p, &k)| (0..k).map(move |t| (p, t)))
        .collect();
    let total = tasks.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<T>> = tasks
        .par_iter()
        .map(|&(p, t)| {
            let r = f(p, t);
            let k = done.fetch_add(1, AtomicOrdering::Relaxed) + 1;
            if let Some(cb) = progress {
                cb(k, total);
            }
            r
        })
        .collect();
    let mut grouped: Vec<Vec<Result<T>>> = trials_per_point.iter().map(|&k| Vec::with_capacity(k)).collect();
    for ((p, _), r) in tasks.into_iter().zip(results) {
        grouped[p].push(r);
    }
    grouped
}

/// Splits trial results into successes and recorded failures.
fn partition<T>(results: Vec<Result<T>>) -> (Vec<T>, Vec<TrialFailure>) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (trial, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push(TrialFailure {
                trial,
                reason: e.to_string(),
            }),
        }
    }
    (ok, failures)
}

/// Runs the scenario named in `config`.
pub fn run_scenario(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    run_scenario_with_progress(config, None)
}

pub fn run_scenario_with_progress(config: &ExperimentConfig, progress: Option<Progress<'_>>) -> Result<ExperimentRecord> {
    config.validate()?;
    match config.scenario {
        Scenario::Fig1RmseVsB | Scenario::Fig2RmseVsSigmaN | Scenario::Custom => selection::run(config, progress),
        Scenario::Fig3Lemma1Pdf | Scenario::Fig5Lemma2Pdf => distribution::run(config, progress),
        Scenario::Fig4Theorem1Bounds => bounds::run(config, progress),
        Scenario::Fig6Theorem2Prob => ordering::run(config, progress),
    }
}

pub fn run_fig1(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig1RmseVsB)?;
    run_scenario(config)
}

pub fn run_fig2(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig2RmseVsSigmaN)?;
    run_scenario(config)
}

pub fn run_fig3(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig3Lemma1Pdf)?;
    run_scenario(config)
}

pub fn run_fig4(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig4Theorem1Bounds)?;
    run_scenario(config)
}

pub fn run_fig5(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig5Lemma2Pdf)?;
    run_scenario(config)
}

pub fn run_fig6(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect_scenario(config, Scenario::Fig6Theorem2Prob)?;
    run_scenario(config)
}

fn expect_scenario(config: &ExperimentConfig, want: Scenario) -> Result<()> {
    if config.scenario != want {
        return Err(key_error("scenario", format!("expected {}, got {}", want.short_name(), config.scenario.short_name())));
    }
    Ok(())
}
