//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use late_score_core::nuisance::{
    OutcomeLearner, PropensityLearner, TreatmentLearner, DEFAULT_CLIP_EPS,
};
use late_score_core::simulation::{Setting, StudySpec};
use late_score_core::weakiv::{WeakIvConfig, WeakLimitSampler};
use late_score_core::{median, LearnerSpec};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{analyze_dataset, scan_grid};
use crate::csv_io::{self, fmt_f64, Schema};
use crate::engine::{run_study, run_study_with_threads};
use crate::error::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(
    name = "late-score",
    version,
    about = "Weak-instrument robust inference for the local average treatment effect"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score confidence set, ratio estimate and Wald interval for a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Monte Carlo coverage study on the simulated design.
    Simulate(SimulateArgs),
    /// Compare the confidence set with direct test inversion on a theta grid.
    Scan(ScanArgs),
    /// Draw from the weak-instrument limit law of the ratio estimator.
    WeakivLimit(WeakivLimitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GArg {
    Ols,
    Cellmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RArg {
    Logit,
    Cellmean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    Weak,
    Strong,
    Custom,
}

/// `known:VALUE` or `logit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropensityArg {
    Known(f64),
    Logit,
}

fn parse_propensity(s: &str) -> Result<PropensityArg, String> {
    if s == "logit" {
        return Ok(PropensityArg::Logit);
    }
    let value = s
        .strip_prefix("known:")
        .ok_or_else(|| format!("expected 'known:VALUE' or 'logit', got '{s}'"))?;
    let p: f64 = value
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(format!("known propensity must lie in (0, 1), got {p}"));
    }
    Ok(PropensityArg::Known(p))
}

#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    /// Outcome regression learner.
    #[arg(long, value_enum, default_value = "ols")]
    pub g: GArg,
    /// Treatment regression learner.
    #[arg(long, value_enum, default_value = "logit")]
    pub r: RArg,
    /// Cross-fitting folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

impl LearnerArgs {
    fn spec(&self, propensity: PropensityArg) -> LearnerSpec {
        LearnerSpec {
            g: match self.g {
                GArg::Ols => OutcomeLearner::OlsLinear,
                GArg::Cellmean => OutcomeLearner::CellMean,
            },
            r: match self.r {
                RArg::Logit => TreatmentLearner::Logistic,
                RArg::Cellmean => TreatmentLearner::CellMean,
            },
            m: match propensity {
                PropensityArg::Known(p) => PropensityLearner::KnownConstant(p),
                PropensityArg::Logit => PropensityLearner::Logistic,
            },
            folds: self.folds,
            clip_eps: DEFAULT_CLIP_EPS,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub outcome: String,
    #[arg(long, default_value = "a")]
    pub treatment: String,
    #[arg(long, default_value = "z")]
    pub instrument: String,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',', default_value = "x1")]
    pub covariates: Vec<String>,
    /// Instrument propensity: `known:VALUE` or `logit`.
    #[arg(long, value_parser = parse_propensity, default_value = "logit")]
    pub propensity: PropensityArg,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataArgs {
    fn schema(&self) -> Schema {
        Schema {
            outcome: self.outcome.clone(),
            treatment: self.treatment.clone(),
            instrument: self.instrument.clone(),
            covariates: self
                .covariates
                .iter()
                .filter(|c| !c.is_empty())
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Machine-readable result row.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub setting: SettingArg,
    /// Instrument strength, for `--setting custom` only.
    #[arg(long)]
    pub pi: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1500,4500,7500,10500,12000"
    )]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instrument propensity: `known:VALUE` or `logit`.
    #[arg(long, value_parser = parse_propensity, default_value = "known:0.5")]
    pub propensity: PropensityArg,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
    /// Also write the scores; defaults to `<out>.scores.csv`.
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    pub dump_scores: Option<Option<PathBuf>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct WeakivLimitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ca: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub cb: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub s11: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub s12: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub s22: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Scan(args) => cmd_scan(&args),
        Command::WeakivLimit(args) => cmd_weakiv_limit(&args),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> AppResult<()> {
    let d = &args.data;
    let learner = d.learner.spec(d.propensity);
    learner.validate()?;
    late_score_core::inference::critical_value(d.alpha)?;
    let data = csv_io::load_csv(&d.data, &d.schema())?;
    let report = analyze_dataset(&data, &learner, d.alpha, d.seed)?;
    let a = &report.analysis;

    println!("n = {}, alpha = {}", data.n(), d.alpha);
    match &a.drml {
        Ok(w) => {
            println!("ratio estimate  phi_hat = {}", w.phi_hat);
            println!(
                "standard error  sigma_hat / sqrt(n) = {}",
                w.sigma_hat() / (data.n() as f64).sqrt()
            );
            println!("Wald interval   [{}, {}]", w.wald_lo, w.wald_hi);
        }
        Err(e) => println!("ratio estimate  undefined: {e}"),
    }
    println!("score set       {} ({})", a.set, a.set.tag());
    println!(
        "D_n(0)          {} (weak instrument: {})",
        a.dn0,
        if a.weak_instrument { "yes" } else { "no" }
    );
    println!(
        "quadratic       a = {}, b = {}, c = {}, delta = {}",
        a.coeffs.a, a.coeffs.b, a.coeffs.c, a.coeffs.delta
    );
    if let Some(ratio) = a.diameter_ratio() {
        println!("diameter ratio  {ratio}");
    }
    if let Some(out) = &args.out {
        csv_io::write_analysis(out, a)?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> AppResult<()> {
    let setting = match (args.setting, args.pi) {
        (SettingArg::Custom, Some(pi)) => Setting::Custom(pi),
        (SettingArg::Custom, None) => {
            return Err(AppError::Config("--setting custom requires --pi".into()))
        }
        (_, Some(_)) => {
            return Err(AppError::Config(
                "--pi is only valid with --setting custom".into(),
            ))
        }
        (SettingArg::Weak, None) => Setting::Weak,
        (SettingArg::Strong, None) => Setting::Strong,
    };
    let mut spec = StudySpec::new(setting, args.n.clone(), args.reps, args.alpha, args.seed);
    spec.learner = args.learner.spec(args.propensity);
    spec.validate()?;
    if args.threads == Some(0) {
        return Err(AppError::Config("--threads must be at least 1".into()));
    }

    let out = match args.threads {
        Some(t) => run_study_with_threads(&spec, t)?,
        None => run_study(&spec)?,
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| AppError::io(&args.out_dir, e))?;
    csv_io::write_replications(&args.out_dir.join("replications.csv"), &out.results)?;
    csv_io::write_summary(&args.out_dir.join("summary.csv"), &out.summary)?;

    if !out.failures.is_empty() {
        log::warn!(
            "{} of {} replications failed",
            out.failures.len(),
            out.failures.len() + out.results.len()
        );
    }
    println!(
        "{:<8} {:>6} {:>6} {:>9} {:>9} {:>11} {:>11} {:>8} {:>8}",
        "setting",
        "n",
        "reps",
        "cov_score",
        "cov_wald",
        "med_d_score",
        "med_d_wald",
        "frac_inf",
        "med_ratio"
    );
    for r in &out.summary {
        println!(
            "{:<8} {:>6} {:>6} {:>9.3} {:>9.3} {:>11.4} {:>11.4} {:>8.3} {:>8.4}",
            r.setting.label(),
            r.n,
            r.reps,
            r.coverage_score,
            r.coverage_wald,
            r.median_diam_score,
            r.median_diam_wald,
            r.frac_infinite,
            r.median_ratio
        );
    }
    Ok(())
}

fn default_scores_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scan".into());
    out.with_file_name(format!("{stem}.scores.csv"))
}

pub fn cmd_scan(args: &ScanArgs) -> AppResult<()> {
    let d = &args.data;
    let learner = d.learner.spec(d.propensity);
    learner.validate()?;
    late_score_core::inference::critical_value(d.alpha)?;
    if !(args.theta_min.is_finite()
        && args.theta_max.is_finite()
        && args.theta_min < args.theta_max)
    {
        return Err(AppError::Config(
            "--theta-min and --theta-max must be finite with min < max".into(),
        ));
    }
    if args.grid_points < 2 {
        return Err(AppError::Config("--grid-points must be at least 2".into()));
    }
    let data = csv_io::load_csv(&d.data, &d.schema())?;
    let report = analyze_dataset(&data, &learner, d.alpha, d.seed)?;
    let rows = scan_grid(
        &report.scores,
        &report.analysis,
        args.theta_min,
        args.theta_max,
        args.grid_points,
    )?;
    let mismatches = rows.iter().filter(|r| r.is_mismatch()).count();
    let band = rows.iter().filter(|r| r.in_boundary_band).count();

    let b = |v: bool| String::from(if v { "1" } else { "0" });
    csv_io::write_csv(
        &args.out,
        &[
            "theta",
            "statistic",
            "member_by_quadratic",
            "member_by_statistic",
            "in_boundary_band",
        ],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.theta),
                fmt_f64(r.statistic),
                b(r.member_by_quadratic),
                b(r.member_by_statistic),
                b(r.in_boundary_band),
            ]
        }),
    )?;
    if let Some(dump) = &args.dump_scores {
        let path = dump
            .clone()
            .unwrap_or_else(|| default_scores_path(&args.out));
        csv_io::write_scores(&path, &report.scores)?;
        println!("scores written to {}", path.display());
    }
    println!(
        "score set {} ({})",
        report.analysis.set,
        report.analysis.set.tag()
    );
    println!("grid points {}, inside boundary band {band}", rows.len());
    println!("mismatches outside boundary band: {mismatches}");
    Ok(())
}

pub fn cmd_weakiv_limit(args: &WeakivLimitArgs) -> AppResult<()> {
    let cfg = WeakIvConfig::new(
        args.ca,
        args.cb,
        [[args.s11, args.s12], [args.s12, args.s22]],
    )?;
    if args.samples == 0 {
        return Err(AppError::Config("--samples must be at least 1".into()));
    }
    let sampler = WeakLimitSampler::new(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let draws = sampler.sample_n(args.samples, &mut rng);
    csv_io::write_draws(&args.out, &draws)?;
    println!("{} draws written to {}", draws.len(), args.out.display());
    println!("median {}", median(&draws));
    Ok(())
}
