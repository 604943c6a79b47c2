//! Fig. 4: coverage and width of the recovery-error interval built from the
//! observed l1 holdout error.

use serde::{Deserialize, Serialize};

use super::{partition, run_tasks, task_seed, Aggregate, ExperimentConfig, ExperimentRecord, Instance, PointOutcome, PointRecord, Progress};
use crate::crossval::cv_error_l1;
use crate::error::{Error, Result};
use crate::solver::{recovery_error_of, solve_grid};
use crate::theory::{theorem1_interval, TheoryParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrial {
    pub trial: usize,
    pub eps_cv: f64,
    pub eps_x: f64,
    /// `sqrt(eps_x^2 + sigma_n^2)`, the quantity the interval bounds.
    pub target: f64,
    pub lower: f64,
    pub upper: f64,
    /// Width from the unclamped lower bound.
    pub width: f64,
    pub lower_clamped: bool,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsOutcome {
    /// Nominal coverage `erf(rho / sqrt 2)`.
    pub confidence: f64,
    pub trials: Vec<BoundTrial>,
}

impl BoundsOutcome {
    pub(super) fn aggregate(&self, sweep_value: f64) -> Vec<Aggregate> {
        let col = |f: fn(&BoundTrial) -> f64| self.trials.iter().map(f).collect::<Vec<_>>();
        [
            ("coverage", col(|t| if t.covered { 1.0 } else { 0.0 })),
            ("lower", col(|t| t.lower)),
            ("upper", col(|t| t.upper)),
            ("target", col(|t| t.target)),
            ("width", col(|t| t.width)),
        ]
        .iter()
        .filter_map(|(name, v)| Aggregate::from_values(sweep_value, name, v))
        .collect()
    }
}

fn run_trial(config: &ExperimentConfig, theory: &TheoryParams, point: usize, trial: usize) -> Result<BoundTrial> {
    let params = config.point(config.sweep_values[point]);
    let inst = Instance::draw(config, &params, task_seed(config.seed, point, trial))?;
    let (a, y) = inst.recovery();
    let r = solve_grid(config.solver, a, &y, &[config.lambda], &config.solver_options)?.remove(0);
    if !r.converged {
        return Err(Error::Scenario(format!("solve at lambda {} did not converge", config.lambda)));
    }
    let (a_cv, y_cv) = inst.holdout();
    let eps_cv = cv_error_l1(&y_cv, &a_cv, &r.estimate)?;
    let eps_x = recovery_error_of(&inst.signal, &r.estimate)?;
    let target = eps_x.hypot(params.noise.sigma_n);
    let ci = theorem1_interval(eps_cv, config.rho, theory)?;
    Ok(BoundTrial {
        trial,
        eps_cv,
        eps_x,
        target,
        lower: ci.lower,
        upper: ci.upper,
        width: ci.width(),
        lower_clamped: ci.lower_clamped,
        covered: ci.contains(target),
    })
}

pub(super) fn run(config: &ExperimentConfig, progress: Option<Progress<'_>>) -> Result<ExperimentRecord> {
    // The regime depends only on the parameters, so probe it once per point.
    let mut setups = Vec::with_capacity(config.sweep_values.len());
    for &v in &config.sweep_values {
        let params = config.point(v);
        let theory = TheoryParams::new(&params.noise, config.m, params.m_cv)?;
        let probe = match theorem1_interval(0.0, config.rho, &theory) {
            Ok(ci) => Ok(ci.confidence),
            Err(Error::Regime { reason, min_m_cv }) => Err((reason, min_m_cv)),
            Err(e) => return Err(e),
        };
        setups.push((theory, probe));
    }
    let counts: Vec<usize> = setups.iter().map(|s| if s.1.is_ok() { config.trials } else { 0 }).collect();
    let results = run_tasks(&counts, progress, |p, t| run_trial(config, &setups[p].0, p, t));
    let points = results
        .into_iter()
        .zip(setups)
        .zip(&config.sweep_values)
        .map(|((r, (_, probe)), &v)| {
            let (trials, failures) = partition(r);
            let outcome = match probe {
                Ok(confidence) => PointOutcome::Bounds(BoundsOutcome { confidence, trials }),
                Err((reason, min_m_cv)) => PointOutcome::Regime { reason, min_m_cv },
            };
            PointRecord::new(v, outcome, failures)
        })
        .collect();
    Ok(ExperimentRecord::assemble(config, points, counts.iter().sum()))
}
