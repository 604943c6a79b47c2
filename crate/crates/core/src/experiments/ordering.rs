//! Fig. 6: how often the l1 holdout error ranks two estimates the same way as
//! their recovery errors, against the predicted probability.
//!
//! Each instance is swept over the lambda grid; every pair of adjacent grid
//! points with distinct estimates is scored on `pair_realizations` fresh
//! holdout draws. Pairs are binned by the gap in relative recovery error.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::distribution::draw_holdout_l1;
use super::stats::binomial_interval;
use super::{partition, run_tasks, task_seed, Aggregate, ExperimentConfig, ExperimentRecord, Instance, PointOutcome, PointRecord, Progress};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};
use crate::solver::solve_grid;
use crate::theory::{theorem2_probability, PairErrors, TheoryParams};

/// Confidence level of the per-bin binomial interval.
pub const BIN_LEVEL: f64 = 0.99;
const CURVE_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingPair {
    pub trial: usize,
    /// Lambda of the estimate with the larger recovery error.
    pub lambda_p: f64,
    pub lambda_q: f64,
    pub eps_p: f64,
    pub eps_q: f64,
    pub inner_pq: f64,
    pub signal_norm: f64,
    /// `(eps_p - eps_q) / ||x||`.
    pub delta_rmse: f64,
    pub predicted: f64,
    /// Realizations with `eps_cv^p >= eps_cv^q`.
    pub successes: u64,
    pub realizations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingBin {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    pub mean_delta_rmse: f64,
    pub realizations: u64,
    pub successes: u64,
    pub empirical: f64,
    /// Mean predicted probability, weighted by realizations.
    pub predicted: f64,
    /// Central binomial interval on the success frequency at the predicted probability.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurvePoint {
    pub delta_rmse: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingOutcome {
    pub bin_edges: Vec<f64>,
    pub pairs: Vec<OrderingPair>,
    /// Adjacent lambdas that gave bit-identical estimates.
    pub identical_skipped: usize,
    /// Pairs outside the regime of the closed form.
    pub regime_skipped: usize,
    /// Bins holding at least one pair.
    pub bins: Vec<OrderingBin>,
    /// Prediction along a one-parameter family through the median pair
    /// geometry: `eps_q` and the error cosine held at their medians while
    /// `eps_p` grows. Zero, then log-spaced up to the largest observed gap.
    pub curve: Vec<TheoryCurvePoint>,
}

impl OrderingOutcome {
    pub(super) fn aggregate(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for b in bin_pairs(&self.pairs, &self.bin_edges) {
            let n = b.realizations as f64;
            for (name, f) in [("empirical", b.empirical), ("predicted", b.predicted)] {
                out.push(Aggregate {
                    sweep_value: b.mean_delta_rmse,
                    criterion: name.into(),
                    mean: f,
                    std_error: Some((f * (1.0 - f) / n).sqrt()),
                    n: b.realizations as usize,
                });
            }
        }
        out
    }
}

/// Bins pairs by `delta_rmse` on `[lo, hi)` and drops empty bins.
pub fn bin_pairs(pairs: &[OrderingPair], edges: &[f64]) -> Vec<OrderingBin> {
    edges
        .windows(2)
        .filter_map(|w| {
            let members: Vec<&OrderingPair> = pairs.iter().filter(|p| w[0] <= p.delta_rmse && p.delta_rmse < w[1]).collect();
            if members.is_empty() {
                return None;
            }
            let realizations: u64 = members.iter().map(|p| p.realizations).sum();
            let successes: u64 = members.iter().map(|p| p.successes).sum();
            let predicted = members.iter().map(|p| p.predicted * p.realizations as f64).sum::<f64>() / realizations as f64;
            let (lo, hi) = binomial_interval(realizations, predicted, BIN_LEVEL);
            Some(OrderingBin {
                lo: w[0],
                hi: w[1],
                pairs: members.len(),
                mean_delta_rmse: members.iter().map(|p| p.delta_rmse).sum::<f64>() / members.len() as f64,
                realizations,
                successes,
                empirical: successes as f64 / realizations as f64,
                predicted,
                ci_lo: lo as f64 / realizations as f64,
                ci_hi: hi as f64 / realizations as f64,
                inside: lo <= successes && successes <= hi,
            })
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Predicted ordering probability against the relative error gap, for pairs
/// shaped like the median observed pair.
pub fn theory_curve(pairs: &[OrderingPair], theory: &TheoryParams) -> Result<Vec<TheoryCurvePoint>> {
    let positive = || pairs.iter().map(|p| p.delta_rmse).filter(|&d| d > 0.0);
    let (Some(eps_q), Some(cos), Some(norm), Some(bottom), Some(top)) = (
        median(pairs.iter().map(|p| p.eps_q).collect()),
        median(pairs.iter().filter(|p| p.eps_p * p.eps_q > 0.0).map(|p| p.inner_pq / (p.eps_p * p.eps_q)).collect()),
        median(pairs.iter().map(|p| p.signal_norm).collect()),
        positive().reduce(f64::min),
        positive().reduce(f64::max),
    ) else {
        return Ok(Vec::new());
    };
    let ratio = (top / bottom).max(1.0);
    (0..CURVE_POINTS)
        .map(|k| {
            let delta_rmse = if k == 0 { 0.0 } else { bottom * ratio.powf((k - 1) as f64 / (CURVE_POINTS - 2) as f64) };
            let eps_p = eps_q + delta_rmse * norm;
            let pair = PairErrors::new(eps_p, eps_q, cos * eps_p * eps_q)?;
            Ok(TheoryCurvePoint {
                delta_rmse,
                probability: theorem2_probability(&pair, theory)?,
            })
        })
        .collect()
}

struct InstancePairs {
    pairs: Vec<OrderingPair>,
    identical: usize,
    regime: usize,
}

fn run_trial(config: &ExperimentConfig, theory: &TheoryParams, point: usize, trial: usize) -> Result<InstancePairs> {
    let params = config.point(config.sweep_values[point]);
    let seed = task_seed(config.seed, point, trial);
    let inst = Instance::draw(config, &params, seed)?;
    let (a, y) = inst.recovery();
    let lambdas = config.lambda_grid.values();
    let results = solve_grid(config.solver, a, &y, lambdas, &config.solver_options)?;
    let bad = results.iter().filter(|r| !r.converged).count();
    if bad > 0 {
        return Err(Error::Scenario(format!("{bad} of {} solves did not converge", results.len())));
    }
    let x = inst.signal.values();
    let norm = inst.signal.norm();
    let deltas: Vec<DVector<f64>> = results.iter().map(|r| x - &r.estimate).collect();
    let mut out = InstancePairs {
        pairs: Vec::new(),
        identical: 0,
        regime: 0,
    };
    for k in 0..lambdas.len().saturating_sub(1) {
        if results[k].estimate == results[k + 1].estimate {
            out.identical += 1;
            continue;
        }
        let (ip, iq) = if deltas[k].norm() >= deltas[k + 1].norm() { (k, k + 1) } else { (k + 1, k) };
        let pe = PairErrors::from_estimates(x, &results[ip].estimate, &results[iq].estimate)?;
        let predicted = match theorem2_probability(&pe, theory) {
            Ok(v) => v,
            Err(Error::Regime { .. }) => {
                out.regime += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut successes = 0;
        for r in 0..config.pair_realizations {
            let s = derive_seed(seed, &[Stream::Holdout as u64, k as u64, r as u64]);
            let e = draw_holdout_l1(&[&deltas[ip], &deltas[iq]], params.m_cv, config.m, &params.noise, s)?;
            if e[0] >= e[1] {
                successes += 1;
            }
        }
        out.pairs.push(OrderingPair {
            trial,
            lambda_p: lambdas[ip],
            lambda_q: lambdas[iq],
            eps_p: pe.eps_p,
            eps_q: pe.eps_q,
            inner_pq: pe.inner_pq,
            signal_norm: norm,
            delta_rmse: (pe.eps_p - pe.eps_q) / norm,
            predicted,
            successes,
            realizations: config.pair_realizations as u64,
        });
    }
    Ok(out)
}

pub(super) fn run(config: &ExperimentConfig, progress: Option<Progress<'_>>) -> Result<ExperimentRecord> {
    let theories = config
        .sweep_values
        .iter()
        .map(|&v| {
            let params = config.point(v);
            TheoryParams::new(&params.noise, config.m, params.m_cv)
        })
        .collect::<Result<Vec<_>>>()?;
    let counts = vec![config.trials; config.sweep_values.len()];
    let results = run_tasks(&counts, progress, |p, t| run_trial(config, &theories[p], p, t));
    let mut points = Vec::with_capacity(results.len());
    for ((r, theory), &v) in results.into_iter().zip(&theories).zip(&config.sweep_values) {
        let (instances, failures) = partition(r);
        let identical_skipped = instances.iter().map(|i| i.identical).sum();
        let regime_skipped = instances.iter().map(|i| i.regime).sum();
        let pairs: Vec<OrderingPair> = instances.into_iter().flat_map(|i| i.pairs).collect();
        let outcome = OrderingOutcome {
            bin_edges: config.bin_edges.clone(),
            bins: bin_pairs(&pairs, &config.bin_edges),
            curve: theory_curve(&pairs, theory)?,
            pairs,
            identical_skipped,
            regime_skipped,
        };
        points.push(PointRecord::new(v, PointOutcome::Ordering(outcome), failures));
    }
    Ok(ExperimentRecord::assemble(config, points, counts.iter().sum()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(delta_rmse: f64, predicted: f64, successes: u64) -> OrderingPair {
        OrderingPair {
            trial: 0,
            lambda_p: 1.0,
            lambda_q: 0.5,
            eps_p: 1.0 + delta_rmse,
            eps_q: 1.0,
            inner_pq: 0.5,
            signal_norm: 1.0,
            delta_rmse,
            predicted,
            successes,
            realizations: 100,
        }
    }

    #[test]
    fn binning_pools_pairs_and_drops_empty_bins() {
        let pairs = [pair(0.05, 0.6, 58), pair(0.07, 0.8, 82), pair(0.5, 0.99, 100)];
        let bins = bin_pairs(&pairs, &[0.0, 0.01, 0.1, 1.0]);
        assert_eq!(bins.len(), 2);
        assert_eq!((bins[0].pairs, bins[0].realizations, bins[0].successes), (2, 200, 140));
        assert!((bins[0].predicted - 0.7).abs() < 1e-12);
        assert!((bins[0].mean_delta_rmse - 0.06).abs() < 1e-12);
        assert!(bins[0].inside);
        assert_eq!(bins[1].lo, 0.1);
    }

    #[test]
    fn curve_starts_at_one_half() {
        let theory = TheoryParams {
            b: 0.05,
            mu_g: 1000.0,
            sigma_g: 20.0,
            sigma_n: 0.5,
            m: 420,
            m_cv: 20,
        };
        let pairs = [pair(0.05, 0.6, 58), pair(0.2, 0.8, 82)];
        let c = theory_curve(&pairs, &theory).unwrap();
        assert_eq!(c.len(), CURVE_POINTS);
        assert_eq!(c[0].delta_rmse, 0.0);
        assert!((c[0].probability - 0.5).abs() < 1e-12);
        assert!((c[CURVE_POINTS - 1].delta_rmse - 0.2).abs() < 1e-12);
        assert!(c.windows(2).all(|w| w[1].probability >= w[0].probability));
        assert!(theory_curve(&[], &theory).unwrap().is_empty());
    }
}
