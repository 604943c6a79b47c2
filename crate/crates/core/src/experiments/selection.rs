//! Figs. 1 and 2: RMSE of the lambda chosen by l1-CV, l2-CV and the oracle.

use serde::{Deserialize, Serialize};

use super::{partition, run_tasks, task_seed, Aggregate, ExperimentConfig, ExperimentRecord, Instance, PointOutcome, PointRecord, Progress};
use crate::crossval::sweep_lambda;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrial {
    pub trial: usize,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
    pub lambda_oracle: f64,
    /// `eps_x / ||x||` at each chosen lambda.
    pub rmse_l1: f64,
    pub rmse_l2: f64,
    pub rmse_oracle: f64,
    /// Impulses that landed on holdout rows.
    pub holdout_impulses: usize,
}

pub(super) fn run_trial(config: &ExperimentConfig, point: usize, trial: usize) -> Result<SelectionTrial> {
    let params = config.point(config.sweep_values[point]);
    let inst = Instance::draw(config, &params, task_seed(config.seed, point, trial))?;
    let sweep = sweep_lambda(&inst.measurements, &inst.split, &config.lambda_grid, &inst.signal, config.solver, &config.solver_options)?;
    let bad = sweep.nonconverged();
    if bad > 0 {
        return Err(Error::Scenario(format!("{bad} of {} solves did not converge", sweep.per_lambda.len())));
    }
    let norm = inst.signal.norm();
    let pick = |k: usize| (sweep.per_lambda[k].lambda, sweep.per_lambda[k].eps_x / norm);
    let (lambda_l1, rmse_l1) = pick(sweep.chosen_l1);
    let (lambda_l2, rmse_l2) = pick(sweep.chosen_l2);
    let (lambda_oracle, rmse_oracle) = pick(sweep.chosen_oracle);
    let holdout_impulses = inst.measurements.noise.select(inst.split.holdout_rows()).impulse_count();
    Ok(SelectionTrial {
        trial,
        lambda_l1,
        lambda_l2,
        lambda_oracle,
        rmse_l1,
        rmse_l2,
        rmse_oracle,
        holdout_impulses,
    })
}

pub(super) fn run(config: &ExperimentConfig, progress: Option<Progress<'_>>) -> Result<ExperimentRecord> {
    let counts = vec![config.trials; config.sweep_values.len()];
    let results = run_tasks(&counts, progress, |p, t| run_trial(config, p, t));
    let points = results
        .into_iter()
        .zip(&config.sweep_values)
        .map(|(r, &v)| {
            let (trials, failures) = partition(r);
            PointRecord::new(v, PointOutcome::Selection { trials }, failures)
        })
        .collect();
    Ok(ExperimentRecord::assemble(config, points, counts.iter().sum()))
}

pub(super) fn aggregate(sweep_value: f64, trials: &[SelectionTrial]) -> Vec<Aggregate> {
    let col = |f: fn(&SelectionTrial) -> f64| trials.iter().map(f).collect::<Vec<_>>();
    [
        ("l1_cv", col(|t| t.rmse_l1)),
        ("l2_cv", col(|t| t.rmse_l2)),
        ("oracle", col(|t| t.rmse_oracle)),
    ]
    .iter()
    .filter_map(|(name, v)| Aggregate::from_values(sweep_value, name, v))
    .collect()
}
