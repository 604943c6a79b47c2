//! Figs. 3 and 5: sampled holdout errors of fixed estimates against the
//! Gaussian approximations.
//!
//! Each trial draws fresh holdout rows and fresh holdout noise. Row entries
//! outside the union support of the error vectors do not affect any residual,
//! so only the supported coordinates are drawn.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stats::{ks_critical_99, ks_statistic, mean_se, sample_std, KS_MIN_SAMPLES};
use super::{
    partition, point_seed, run_tasks, task_seed, Aggregate, ExperimentConfig, ExperimentRecord, Instance, PointOutcome, PointRecord,
    Progress, Scenario,
};
use crate::error::{invalid, Error, Result};
use crate::model::{gen_noise_rows, NoiseParams};
use crate::rng::{rng_from_seed, stream_seed, Stream};
use crate::solver::solve_grid;
use crate::theory::{lemma1_distribution, lemma2_distribution, GaussianApprox, PairErrors, TheoryParams};

/// Empirical samples, their Gaussian prediction and fit statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesOutcome {
    /// Lambdas of the estimates; for a pair, the larger-error estimate first.
    pub lambdas: Vec<f64>,
    /// Recovery errors `||x - x_hat||`, in the order of `lambdas`.
    pub eps_x: Vec<f64>,
    /// `<x - x_p, x - x_q>` for a pair.
    pub inner_pq: Option<f64>,
    pub predicted: GaussianApprox,
    /// One holdout error (or error difference) per trial.
    pub samples: Vec<f64>,
    pub ks: Option<f64>,
    pub ks_critical_99: f64,
    /// Fewer samples than the KS threshold assumes.
    pub low_sample: bool,
    pub sample_mean: f64,
    pub sample_std: f64,
    /// `(sample_mean - mean) / (sd / sqrt(n))` with the predicted sd; `None`
    /// when the prediction is degenerate.
    pub mean_z: Option<f64>,
    /// `sample_std / sd`.
    pub std_ratio: Option<f64>,
}

impl SamplesOutcome {
    fn new(lambdas: Vec<f64>, eps_x: Vec<f64>, inner_pq: Option<f64>, predicted: GaussianApprox, samples: Vec<f64>) -> Self {
        let n = samples.len();
        let sd = predicted.std_dev();
        let sample_mean = mean_se(&samples).mean;
        let sample_std = if n > 1 { sample_std(&samples) } else { 0.0 };
        Self {
            ks: ks_statistic(&samples, &predicted).ok(),
            ks_critical_99: ks_critical_99(n.max(1)),
            low_sample: n < KS_MIN_SAMPLES,
            mean_z: (sd > 0.0).then(|| (sample_mean - predicted.mean) / (sd / (n as f64).sqrt())),
            std_ratio: (sd > 0.0).then(|| sample_std / sd),
            sample_mean,
            sample_std,
            lambdas,
            eps_x,
            inner_pq,
            predicted,
            samples,
        }
    }

    pub(super) fn aggregate(&self, sweep_value: f64) -> Vec<Aggregate> {
        let mut out: Vec<Aggregate> = Aggregate::from_values(sweep_value, "empirical", &self.samples).into_iter().collect();
        let n = self.samples.len();
        if n > 0 {
            out.push(Aggregate {
                sweep_value,
                criterion: "predicted".into(),
                mean: self.predicted.mean,
                std_error: Some(self.predicted.std_dev() / (n as f64).sqrt()),
                n,
            });
        }
        out
    }
}

/// l1 holdout errors `sum_i |a_i . delta + eta_i|` of several error vectors
/// `delta = x - x_hat` on one fresh draw of `m_cv` holdout rows with entries
/// `N(0, 1/m)` and matching noise.
pub fn draw_holdout_l1(deltas: &[&DVector<f64>], m_cv: usize, m: usize, noise: &NoiseParams, seed: u64) -> Result<Vec<f64>> {
    let n = match deltas.first() {
        Some(d) => d.len(),
        None => return invalid("need at least one error vector"),
    };
    if deltas.iter().any(|d| d.len() != n) {
        return invalid("error vectors differ in length");
    }
    let support: Vec<usize> = (0..n).filter(|&j| deltas.iter().any(|d| d[j] != 0.0)).collect();
    let eta = gen_noise_rows(m_cv, m, noise, stream_seed(seed, Stream::Noise, 0))?;
    let mut rng = rng_from_seed(stream_seed(seed, Stream::Holdout, 0));
    let scale = 1.0 / (m as f64).sqrt();
    let mut errors = vec![0.0; deltas.len()];
    let mut proj = vec![0.0; deltas.len()];
    for i in 0..m_cv {
        proj.iter_mut().for_each(|p| *p = 0.0);
        for &j in &support {
            let a = scale * rng.sample::<f64, _>(StandardNormal);
            for (p, d) in proj.iter_mut().zip(deltas) {
                *p += a * d[j];
            }
        }
        let e = eta.total_at(i);
        for (err, p) in errors.iter_mut().zip(&proj) {
            *err += (p + e).abs();
        }
    }
    Ok(errors)
}

pub(super) fn run(config: &ExperimentConfig, progress: Option<Progress<'_>>) -> Result<ExperimentRecord> {
    let pair = config.scenario == Scenario::Fig5Lemma2Pdf;
    // Setup per point: the estimates and their prediction, or a regime note.
    let mut setups = Vec::with_capacity(config.sweep_values.len());
    for (p, &v) in config.sweep_values.iter().enumerate() {
        let params = config.point(v);
        let inst = Instance::draw(config, &params, point_seed(config.seed, p))?;
        let (a, y) = inst.recovery();
        let lambdas = if pair { vec![config.lambda, config.lambda_alt] } else { vec![config.lambda] };
        let results = solve_grid(config.solver, a, &y, &lambdas, &config.solver_options)?;
        if let Some(k) = results.iter().position(|r| !r.converged) {
            return Err(Error::Scenario(format!("fixed estimate at lambda {} did not converge", lambdas[k])));
        }
        let x = inst.signal.values();
        let mut fixed: Vec<(f64, DVector<f64>)> = lambdas.iter().zip(results).map(|(&l, r)| (l, x - r.estimate)).collect();
        // Larger recovery error first.
        fixed.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
        let theory = TheoryParams::new(&params.noise, config.m, params.m_cv)?;
        let predicted = if pair {
            let (dp, dq) = (&fixed[0].1, &fixed[1].1);
            let (ep, eq) = (dp.norm(), dq.norm());
            PairErrors::new(ep, eq, dp.dot(dq).clamp(-ep * eq, ep * eq)).and_then(|pe| lemma2_distribution(&pe, &theory))
        } else {
            lemma1_distribution(fixed[0].1.norm(), &theory)
        };
        let predicted = match predicted {
            Ok(g) => Ok(g),
            Err(Error::Regime { reason, min_m_cv }) => Err((reason, min_m_cv)),
            Err(e) => return Err(e),
        };
        setups.push((params, fixed, predicted));
    }

    let counts: Vec<usize> = setups.iter().map(|s| if s.2.is_ok() { config.trials } else { 0 }).collect();
    let results = run_tasks(&counts, progress, |p, t| {
        let (params, fixed, _) = &setups[p];
        let deltas: Vec<&DVector<f64>> = fixed.iter().map(|f| &f.1).collect();
        let errs = draw_holdout_l1(&deltas, params.m_cv, config.m, &params.noise, task_seed(config.seed, p, t))?;
        Ok(if pair { errs[0] - errs[1] } else { errs[0] })
    });

    let points = results
        .into_iter()
        .zip(setups)
        .zip(&config.sweep_values)
        .map(|((r, (_, fixed, predicted)), &v)| {
            let (samples, failures) = partition(r);
            let outcome = match predicted {
                Err((reason, min_m_cv)) => PointOutcome::Regime { reason, min_m_cv },
                Ok(g) => {
                    let inner = pair.then(|| {
                        let (dp, dq) = (&fixed[0].1, &fixed[1].1);
                        dp.dot(dq)
                    });
                    let lambdas = fixed.iter().map(|f| f.0).collect();
                    let eps = fixed.iter().map(|f| f.1.norm()).collect();
                    PointOutcome::Samples(SamplesOutcome::new(lambdas, eps, inner, g, samples))
                }
            };
            PointRecord::new(v, outcome, failures)
        })
        .collect();
    Ok(ExperimentRecord::assemble(config, points, counts.iter().sum()))
}
