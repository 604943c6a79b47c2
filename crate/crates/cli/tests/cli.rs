use std::path::Path;
use std::process::{Command, Output};

use l1cv::experiments::{read_record, PointOutcome, Scenario};

fn l1cv(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_l1cv"));
    cmd.args(args).env_remove("L1CV_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// Small instances keep the end-to-end runs fast.
const SMALL: [&str; 5] = ["n=80", "m=40", "s=4", "m_cv=8", "trials=3"];

#[test]
fn folded_mean_of_standard_normal() {
    let o = l1cv(&["theory", "--op", "folded-mean", "--mu", "0", "--sigma", "1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
}

#[test]
fn fig3_writes_named_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = l1cv(&["fig3", "--seed", "7", "--out", out.to_str().unwrap(), "-q", "trials=50"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("fig3_7.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "sweep_value,criterion,mean,std_error,n");
    assert_eq!(csv.lines().count(), 3);
    let record = read_record(&out.join("fig3_7.json")).unwrap();
    assert_eq!((record.scenario, record.config.seed, record.config.m), (Scenario::Fig3Lemma1Pdf, 7, 800));
    match &record.points[0].outcome {
        PointOutcome::Samples(s) => {
            assert_eq!(s.samples.len(), 50);
            assert!(s.low_sample);
        }
        other => panic!("unexpected outcome {other:?}"),
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--seed", "3", "-q"];
    args.extend(SMALL);
    let o = l1cv(&args, &[("L1CV_OUT_DIR", dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("custom_3.csv").exists());
    assert!(dir.path().join("custom_3.json").exists());
}

#[test]
fn config_file_error_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.toml");
    std::fs::write(&path, "schema_version = 1\nscenario = \"custom\"\nm = 420\nm_cv = 420\n").unwrap();
    let o = l1cv(&["sweep", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m_cv"), "{}", stderr(&o));

    std::fs::write(&path, "[noise]\ncolour = 1\n").unwrap();
    let o = l1cv(&["sweep", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise.colour"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(l1cv(&["fig9"], &[]).status.code(), Some(1));
    assert_eq!(l1cv(&["fig1", "--no-such-flag"], &[]).status.code(), Some(1));
    assert_eq!(l1cv(&[], &[]).status.code(), Some(1));
}

#[test]
fn help_lists_subcommands_and_defaults() {
    let o = l1cv(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "sweep", "solve", "theory"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
    assert!(text.contains("mu_g=1000"));
    assert!(text.contains("sweep sigma_n=0..15"));
}

#[test]
fn excluded_trials_exit_three_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--seed", "5", "-q", "--out", dir.path().to_str().unwrap(), "solver_options.max_iterations=1"];
    args.extend(SMALL);
    let o = l1cv(&args, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let record = read_record(&dir.path().join("custom_5.json")).unwrap();
    assert!(record.threshold_tripped);
    assert_eq!(record.excluded_trials, 3);
}

#[test]
fn regime_violation_is_a_runtime_error() {
    let o = l1cv(&["theory", "--op", "theorem1", "--eps-cv", "10", "--m-cv", "2", "--b", "0.5"], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("regime"));
}

#[test]
fn solve_reports_json_summary() {
    let mut args = vec!["solve", "--seed", "2", "--lambda", "0.5"];
    args.extend(SMALL);
    let o = l1cv(&args, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["converged"], true);
    assert_eq!(v["lambda"], 0.5);
    assert!(v["rmse"].as_f64().unwrap() >= 0.0);
}
