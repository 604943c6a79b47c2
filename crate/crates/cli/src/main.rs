mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use l1cv::crossval::cv_error_l1;
use l1cv::experiments::{self, ExperimentConfig, Instance, Scenario, SweepAxis};
use l1cv::solver::{recovery_error_of, solve_grid};
use l1cv::theory::{
    abs_product_moment, folded_gaussian_mean, lemma1_distribution, lemma2_distribution, theorem1_interval, theorem2_probability, PairErrors,
    TheoryParams,
};
use serde_json::json;

use crate::config::ConfigError;

const OUT_DIR_ENV: &str = "L1CV_OUT_DIR";

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "l1cv", version)]
#[command(about = "l1 cross-validation for compressed sensing under impulse noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// RMSE of l1-CV, l2-CV and oracle lambda against impulse probability b
    Fig1(RunArgs),
    /// RMSE of l1-CV, l2-CV and oracle lambda against Gaussian noise level sigma_n
    Fig2(RunArgs),
    /// Sampled l1 holdout error of a fixed estimate against its Gaussian approximation
    Fig3(RunArgs),
    /// Coverage and width of the recovery-error interval against m_cv
    Fig4(RunArgs),
    /// Sampled holdout-error difference of two estimates against its Gaussian approximation
    Fig5(RunArgs),
    /// Frequency of correct ordering by holdout error against the predicted probability
    Fig6(RunArgs),
    /// Run the scenario named in the config (`custom` when none is given)
    Sweep(RunArgs),
    /// Solve one synthetic instance at a single lambda and print a JSON summary
    Solve(SolveArgs),
    /// Evaluate a closed-form result
    Theory(TheoryArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; keys as in the JSON record's `config`
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: $L1CV_OUT_DIR, else ./results]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Do not print the progress counter
    #[arg(long, short)]
    quiet: bool,
    /// Overrides such as `trials=50` or `noise.b=0.1`, applied after the file
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Regularization weight
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Sweep point whose parameters are used
    #[arg(long, default_value_t = 0)]
    point: usize,
    /// Trial index whose instance is drawn
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryOp {
    /// E|Z| for Z ~ N(mu, sigma^2)
    FoldedMean,
    /// E|XY| for standard normals with correlation rho
    AbsMoment,
    /// Gaussian approximation of the l1 holdout error given eps_x
    Lemma1,
    /// Interval on sqrt(eps_x^2 + sigma_n^2) given eps_cv
    Theorem1,
    /// Gaussian approximation of the holdout-error difference of two estimates
    Lemma2,
    /// Probability that the holdout error ranks two estimates correctly
    Theorem2,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    op: TheoryOp,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Correlation for abs-moment, interval multiplier for theorem1
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_x: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_cv: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_p: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_q: f64,
    /// Inner product of the two error vectors
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    inner: f64,
    #[arg(long, default_value_t = 0.05)]
    b: f64,
    #[arg(long, default_value_t = 700.0)]
    mu_g: f64,
    #[arg(long, default_value_t = 100.0)]
    sigma_g: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_n: f64,
    #[arg(long, default_value_t = 420)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    m_cv: usize,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<l1cv::Error> for Failure {
    fn from(e: l1cv::Error) -> Self {
        match e {
            l1cv::Error::InvalidArgument(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn fmt_values(v: &[f64]) -> String {
    match v {
        [] => String::new(),
        [x] => format!("{x}"),
        [first, .., last] if v.len() > 4 => format!("{first}..{last} ({} values)", v.len()),
        _ => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
    }
}

/// One line of built-in defaults per scenario, for `--help`.
fn defaults_help() -> String {
    let mut out = String::from("Built-in defaults (override with --config or KEY=VALUE):\n");
    for s in Scenario::ALL {
        let c = ExperimentConfig::defaults(s);
        let axis = match c.sweep_axis {
            SweepAxis::B => "b",
            SweepAxis::SigmaN => "sigma_n",
            SweepAxis::MCv => "m_cv",
        };
        let grid = c.lambda_grid.values();
        let mut fields = vec![
            ("n", c.n.to_string()),
            ("m", c.m.to_string()),
            ("m_cv", c.m_cv.to_string()),
            ("s", c.s.to_string()),
            ("amp_sigma", format!("{:.4}", c.amp_sigma)),
            ("b", c.noise.b.to_string()),
            ("mu_g", c.noise.mu_g.to_string()),
            ("sigma_g", c.noise.sigma_g.to_string()),
            ("sigma_n", c.noise.sigma_n.to_string()),
            ("trials", c.trials.to_string()),
            ("lambda_grid", format!("{}..{} ({} values)", grid[0], grid[grid.len() - 1], grid.len())),
            ("lambda", c.lambda.to_string()),
            ("lambda_alt", c.lambda_alt.to_string()),
            ("rho", c.rho.to_string()),
            ("pair_realizations", c.pair_realizations.to_string()),
            ("seed", c.seed.to_string()),
        ];
        fields.retain(|(k, _)| *k != axis);
        let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("  {:<6} sweep {axis}={}; {}\n", s.short_name(), fmt_values(&c.sweep_values), body.join(" ")));
    }
    out.push_str(&format!("Outputs go to --out, else ${OUT_DIR_ENV}, else ./results.\nExit codes: 0 success, 1 usage, 2 config, 3 runtime."));
    out
}

fn out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run(fixed: Option<Scenario>, args: RunArgs) -> Result<(), Failure> {
    let config = config::resolve(fixed, args.config.as_deref(), &args.overrides, args.seed)?;
    let dir = out_dir(args.out);
    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet && (done == total || done.is_multiple_of((total / 100).max(1))) {
            eprint!("\r{done}/{total}");
            if done == total {
                eprintln!();
            }
        }
    };
    let record = experiments::run_scenario_with_progress(&config, Some(&progress)).map_err(|e| Failure::Runtime(e.to_string()))?;
    let (csv, json) = experiments::write_outputs(&record, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{}", csv.display());
    println!("{}", json.display());
    record.check().map_err(|e| Failure::Runtime(e.to_string()))
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let config = config::resolve(None, args.config.as_deref(), &args.overrides, args.seed)?;
    let inst = Instance::for_trial(&config, args.point, args.trial)?;
    let (a, y) = inst.recovery();
    let r = solve_grid(config.solver, a, &y, &[args.lambda], &config.solver_options)?.remove(0);
    let (a_cv, y_cv) = inst.holdout();
    let eps_x = recovery_error_of(&inst.signal, &r.estimate)?;
    let summary = json!({
        "lambda": args.lambda,
        "solver": config.solver,
        "objective": r.objective,
        "iterations": r.iterations,
        "converged": r.converged,
        "duality_gap": r.duality_gap,
        "eps_x": eps_x,
        "rmse": eps_x / inst.signal.norm(),
        "eps_cv_l1": cv_error_l1(&y_cv, &a_cv, &r.estimate)?,
    });
    println!("{summary}");
    if r.converged {
        Ok(())
    } else {
        Err(Failure::Runtime("solver did not converge".into()))
    }
}

fn theory(a: TheoryArgs) -> Result<(), Failure> {
    let params = || {
        let p = TheoryParams {
            b: a.b,
            mu_g: a.mu_g,
            sigma_g: a.sigma_g,
            sigma_n: a.sigma_n,
            m: a.m,
            m_cv: a.m_cv,
        };
        p.validate().map(|_| p)
    };
    let pair = || PairErrors::new(a.eps_p, a.eps_q, a.inner);
    let out = match a.op {
        TheoryOp::FoldedMean => json!(folded_gaussian_mean(a.mu, a.sigma)?),
        TheoryOp::AbsMoment => json!(abs_product_moment(a.rho)?),
        TheoryOp::Lemma1 => json!(lemma1_distribution(a.eps_x, &params()?)?),
        TheoryOp::Theorem1 => json!(theorem1_interval(a.eps_cv, a.rho, &params()?)?),
        TheoryOp::Lemma2 => json!(lemma2_distribution(&pair()?, &params()?)?),
        TheoryOp::Theorem2 => json!(theorem2_probability(&pair()?, &params()?)?),
    };
    println!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    let matches = match Cli::command().after_help(defaults_help()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Fig1(a) => run(Some(Scenario::Fig1RmseVsB), a),
        Command::Fig2(a) => run(Some(Scenario::Fig2RmseVsSigmaN), a),
        Command::Fig3(a) => run(Some(Scenario::Fig3Lemma1Pdf), a),
        Command::Fig4(a) => run(Some(Scenario::Fig4Theorem1Bounds), a),
        Command::Fig5(a) => run(Some(Scenario::Fig5Lemma2Pdf), a),
        Command::Fig6(a) => run(Some(Scenario::Fig6Theorem2Prob), a),
        Command::Sweep(a) => run(None, a),
        Command::Solve(a) => solve(a),
        Command::Theory(a) => theory(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
