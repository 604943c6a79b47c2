//! End-to-end checks of the Monte Carlo harness at small scale.

use l1cv::experiments::{aggregate, read_record, run_scenario, write_outputs, ExperimentConfig, ExperimentRecord, PointOutcome, Scenario};

/// A scenario shrunk to run in well under a second per trial.
fn small(scenario: Scenario) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(scenario);
    c.n = 120;
    c.m = 60;
    c.s = 5;
    c.m_cv = 10;
    c.trials = 4;
    match scenario {
        Scenario::Fig3Lemma1Pdf | Scenario::Fig5Lemma2Pdf | Scenario::Fig6Theorem2Prob => c.sweep_values = vec![10.0],
        Scenario::Fig4Theorem1Bounds => c.sweep_values = vec![10.0, 20.0],
        _ => {}
    }
    if scenario == Scenario::Fig1RmseVsB {
        c.sweep_values = vec![0.02, 0.08];
    }
    c.pair_realizations = 20;
    c.lambda_grid = l1cv::crossval::LambdaGrid::decades(-2, 2);
    c
}

fn run_on_pool(config: &ExperimentConfig, threads: usize) -> ExperimentRecord {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_scenario(config).unwrap())
}

#[test]
fn records_match_across_thread_counts() {
    for s in [Scenario::Fig1RmseVsB, Scenario::Fig4Theorem1Bounds, Scenario::Fig5Lemma2Pdf, Scenario::Fig6Theorem2Prob] {
        let c = small(s);
        let one = serde_json::to_vec(&run_on_pool(&c, 1)).unwrap();
        let four = serde_json::to_vec(&run_on_pool(&c, 4)).unwrap();
        assert_eq!(one, four, "{}", s.short_name());
    }
}

#[test]
fn seed_changes_the_record() {
    let mut c = small(Scenario::Custom);
    let a = run_scenario(&c).unwrap();
    c.seed += 1;
    let b = run_scenario(&c).unwrap();
    assert_ne!(a.points, b.points);
}

#[test]
fn aggregates_recompute_from_trials_and_survive_output() {
    let dir = tempfile::tempdir().unwrap();
    for s in Scenario::ALL {
        let record = run_scenario(&small(s)).unwrap();
        for p in &record.points {
            assert_eq!(p.aggregates, aggregate(p.sweep_value, &p.outcome), "{}", s.short_name());
        }
        let (csv_path, json_path) = write_outputs(&record, dir.path()).unwrap();
        assert_eq!(read_record(&json_path).unwrap(), record);

        // The CSV is the aggregates, row for row.
        let mut rows = csv::Reader::from_path(&csv_path).unwrap();
        let flat: Vec<_> = record.points.iter().flat_map(|p| p.aggregates.iter()).collect();
        let mut count = 0;
        for (row, a) in rows.records().zip(&flat) {
            let row = row.unwrap();
            assert_eq!(row[0].parse::<f64>().unwrap(), a.sweep_value);
            assert_eq!(&row[1], a.criterion);
            assert_eq!(row[2].parse::<f64>().unwrap(), a.mean);
            assert_eq!(row[3].parse::<f64>().ok(), a.std_error);
            assert_eq!(row[4].parse::<usize>().unwrap(), a.n);
            count += 1;
        }
        assert_eq!(count, flat.len());
    }
}

#[test]
fn standard_error_shrinks_by_root_two_when_trials_double() {
    let mut c = small(Scenario::Fig3Lemma1Pdf);
    let se = |trials: usize, c: &mut ExperimentConfig| {
        c.trials = trials;
        let r = run_scenario(c).unwrap();
        let a = r.points[0].aggregates.iter().find(|a| a.criterion == "empirical").unwrap();
        a.std_error.unwrap()
    };
    let ratio = se(1000, &mut c) / se(2000, &mut c);
    // The sample sd fluctuates by about 2% at these sizes.
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn identical_estimates_give_zero_difference() {
    let mut c = small(Scenario::Fig5Lemma2Pdf);
    c.lambda_alt = c.lambda;
    c.trials = 30;
    let r = run_scenario(&c).unwrap();
    match &r.points[0].outcome {
        PointOutcome::Samples(s) => {
            assert!(s.samples.iter().all(|&d| d == 0.0));
            assert_eq!(s.predicted.mean, 0.0);
            // The predicted variance cancels to rounding level.
            assert!(s.predicted.variance < 1e-12, "{}", s.predicted.variance);
        }
        other => panic!("unexpected outcome {other:?}"),
    }
}

#[test]
fn small_samples_are_flagged() {
    let r = run_scenario(&small(Scenario::Fig3Lemma1Pdf)).unwrap();
    match &r.points[0].outcome {
        PointOutcome::Samples(s) => {
            assert!(s.low_sample);
            assert_eq!(s.samples.len(), 4);
        }
        other => panic!("unexpected outcome {other:?}"),
    }
}

#[test]
fn regime_points_run_no_trials() {
    let mut c = small(Scenario::Fig4Theorem1Bounds);
    // With b = 0.5 and rho = 3 the interval needs m_cv >= 48.
    c.noise.b = 0.5;
    c.m = 120;
    c.sweep_values = vec![5.0, 60.0];
    let r = run_scenario(&c).unwrap();
    match &r.points[0].outcome {
        PointOutcome::Regime { min_m_cv, .. } => assert_eq!(*min_m_cv, Some(48)),
        other => panic!("unexpected outcome {other:?}"),
    }
    assert!(matches!(r.points[1].outcome, PointOutcome::Bounds(_)));
    assert_eq!(r.total_trials, c.trials);
    assert!(r.points[0].aggregates.is_empty());
}

#[test]
fn wrong_scenario_runner_is_rejected() {
    let c = small(Scenario::Fig2RmseVsSigmaN);
    assert!(l1cv::experiments::run_fig1(&c).is_err());
    let mut bad = c.clone();
    bad.trials = 0;
    assert!(run_scenario(&bad).unwrap_err().to_string().contains("trials"));
}
