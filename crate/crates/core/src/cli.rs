//! Command-line front end: argument parsing, dispatch and CSV/JSON rendering.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::applications::{
    power_study, psi_interval, psi_plausibility, rates_plausibility, NormalSample, PowerConfig, RatesSample,
};
use crate::association::{Assertion, Association, ScalarModel};
use crate::belief::{
    auto_bracket, belief_exact, decide, plausibility_region, region_from_curve, Decision, GridSpec, PlausibilityRegion,
};
use crate::error::ImError;
use crate::numeric::RandomStream;
use crate::prs::PredictiveRandomSet;
use crate::score_balance::{
    check_unimodal_condition, two_sided_belief_at, ExponentialScore, GaussianScore, ScoreModel, DEFAULT_TOL,
};
use crate::validity::{
    check_coverage, check_im_validity, check_point_validity, check_prs_validity, check_psi_coverage,
    check_score_balanced, CalibrationReport, ValidityForm, DEFAULT_ALPHAS,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(ImError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ImError> for CliError {
    fn from(e: ImError) -> Self {
        match e {
            ImError::Domain(msg) | ImError::Unsupported(msg) => CliError::Config(msg),
            other => CliError::Numeric(other),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CALIBRATION: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "imodel",
    version,
    about = "Belief, plausibility and calibration for inferential models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plausibility of singleton assertions over a parameter grid.
    PlCurve(CommonArgs),
    /// Plausibility region {θ : pl(θ) > α}.
    Interval(CommonArgs),
    /// IM test of an assertion: reject iff pl(A) <= α.
    Test(TestArgs),
    /// Simulation checks of validity and coverage.
    Validate(ValidateArgs),
    /// Power of the IM and likelihood-ratio tests for equal exponential rates.
    Power(PowerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Aligned columns for reading in a terminal.
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridArg {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid must be lo:hi:count, got '{s}'"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("bad grid lower end: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("bad grid upper end: {e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("bad grid count: {e}"))?;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(format!("grid needs finite lo < hi, got {lo}:{hi}"));
        }
        if count < 2 {
            return Err(format!("grid count must be at least 2, got {count}"));
        }
        Ok(Self { lo, hi, count })
    }
}

impl GridArg {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// gaussian, poisson, exponential, psi (x = n,xbar,s) or rates (x = observations).
    #[arg(long, default_value = "gaussian")]
    pub model: String,
    /// default, lower, upper, singleton or score-balanced.
    #[arg(long, default_value = "default")]
    pub prs: String,
    /// Observation(s), comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Parameter grid lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<GridArg>,
    /// Monte Carlo replications.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// point:θ, complement:θ, left:θ, right:θ, interval:a:b or outside:a:b.
    #[arg(long)]
    pub assertion: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidateMode {
    Prs,
    Im,
    Coverage,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = ValidateMode::Im)]
    pub mode: ValidateMode,
    /// Assertion for IM validity; point assertions at each grid value when absent.
    #[arg(long)]
    pub assertion: Option<String>,
    /// True parameter for coverage.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 50)]
    pub n1: usize,
    #[arg(long, default_value_t = 50)]
    pub n2: usize,
    /// Simulated datasets per rate ratio.
    #[arg(long, default_value_t = 2000)]
    pub datasets: usize,
    /// Null datasets calibrating the likelihood-ratio test.
    #[arg(long, default_value_t = 10_000)]
    pub null_reps: usize,
    /// Rate ratios, comma-separated; overrides --grid.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
}

/// Rendered command output.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub calibration_failed: bool,
}

enum ModelId {
    Scalar(Association),
    Psi,
    Rates,
}

fn parse_model(s: &str) -> CliResult<ModelId> {
    match s.to_ascii_lowercase().as_str() {
        "psi" => Ok(ModelId::Psi),
        "rates" => Ok(ModelId::Rates),
        other => Ok(ModelId::Scalar(Association::new(other.parse::<ScalarModel>()?))),
    }
}

enum PrsId {
    Named(PredictiveRandomSet),
    ScoreBalanced,
}

fn parse_prs(s: &str) -> CliResult<PrsId> {
    if s.eq_ignore_ascii_case("score-balanced") {
        Ok(PrsId::ScoreBalanced)
    } else {
        Ok(PrsId::Named(s.parse()?))
    }
}

fn score_model(model: ScalarModel) -> CliResult<&'static dyn ScoreModel> {
    match model {
        ScalarModel::Gaussian => Ok(&GaussianScore),
        ScalarModel::Exponential => Ok(&ExponentialScore),
        ScalarModel::Poisson => Err(config(
            "score-balanced sets need a continuous model (gaussian or exponential)",
        )),
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn single_x(args: &CommonArgs) -> CliResult<f64> {
    match args.x.as_slice() {
        [x] => Ok(*x),
        _ => Err(config("this model takes exactly one observation in --x")),
    }
}

fn normal_sample(args: &CommonArgs) -> CliResult<NormalSample> {
    match args.x.as_slice() {
        [n, xbar, s] if *n >= 2.0 && n.fract() == 0.0 => Ok(NormalSample::new(*n as u32, *xbar, *s)?),
        _ => Err(config("psi takes --x n,xbar,s with integer n >= 2")),
    }
}

fn default_grid(model: &ModelId, args: &CommonArgs) -> CliResult<GridArg> {
    if let Some(g) = args.grid {
        return Ok(g);
    }
    Ok(match model {
        ModelId::Scalar(a) => {
            let x = single_x(args)?;
            match a.model() {
                ScalarModel::Gaussian => GridArg {
                    lo: x - 4.0,
                    hi: x + 4.0,
                    count: 161,
                },
                ScalarModel::Poisson => GridArg {
                    lo: 0.05,
                    hi: x + 6.0 * (x + 1.0).sqrt() + 6.0,
                    count: 200,
                },
                ScalarModel::Exponential => GridArg {
                    lo: x / 20.0,
                    hi: 20.0 * x,
                    count: 200,
                },
            }
        }
        ModelId::Psi => {
            let s = normal_sample(args)?;
            let centre = s.xbar / s.s;
            GridArg {
                lo: centre - 3.0,
                hi: centre + 3.0,
                count: 121,
            }
        }
        ModelId::Rates => return Err(config("the rates model has no parameter grid")),
    })
}

/// `pl_x(θ)` for a scalar model under either a named set or the score-balanced family.
fn scalar_pl(assoc: &Association, prs: &PrsId, x: f64, theta: f64) -> crate::Result<f64> {
    match prs {
        PrsId::Named(p) => crate::belief::plausibility_point(assoc, p, x, theta),
        PrsId::ScoreBalanced => {
            let m = score_model(assoc.model()).map_err(|e| ImError::Unsupported(e.to_string()))?;
            Ok(1.0 - two_sided_belief_at(m, theta, x, DEFAULT_TOL)?)
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn comment_line(command: &str, cfg: &impl Serialize) -> String {
    format!(
        "# imodel {command} {}\n",
        serde_json::to_string(cfg).expect("config serializes")
    )
}

/// Converts CSV text into space-aligned columns when the text format was requested.
fn finish(format: Format, text: String) -> String {
    if format != Format::Text {
        return text;
    }
    let (comments, body): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    let rows: Vec<Vec<&str>> = body.iter().map(|l| l.split(',').collect()).collect();
    let ncol = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:>w$}", w = widths[j]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn render_json(cfg: &impl Serialize, results: Value, diagnostics: Value) -> String {
    let doc = json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "results": results,
        "diagnostics": diagnostics,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json renders");
    s.push('\n');
    s
}

fn cmd_pl_curve(args: &CommonArgs) -> CliResult<Output> {
    let model = parse_model(&args.model)?;
    let prs = parse_prs(&args.prs)?;
    let grid = default_grid(&model, args)?;
    let thetas = grid.points();
    let rows: Vec<(f64, f64, f64)> = match &model {
        ModelId::Scalar(assoc) => {
            let x = single_x(args)?;
            assoc.check_observation(x)?;
            thetas
                .iter()
                .map(|&t| {
                    let pl = match &prs {
                        PrsId::Named(p) => belief_exact(assoc, p, x, &Assertion::Point(t))?,
                        PrsId::ScoreBalanced => {
                            let pl = scalar_pl(assoc, &prs, x, t)?;
                            crate::belief::BeliefResult {
                                belief: 0.0,
                                plausibility: pl,
                                mc_se_belief: 0.0,
                                mc_se_plausibility: 0.0,
                                replicates: 0,
                            }
                        }
                    };
                    Ok((t, pl.plausibility, pl.belief))
                })
                .collect::<CliResult<_>>()?
        }
        ModelId::Psi => {
            let s = normal_sample(args)?;
            thetas
                .iter()
                .map(|&t| Ok((t, psi_plausibility(&s, t)?, 0.0)))
                .collect::<CliResult<_>>()?
        }
        ModelId::Rates => return Err(config("pl-curve is not defined for the rates model; use test")),
    };
    // For score-balanced sets, report whether V(t) is minimized at t = 0 when θ0 equals the observation.
    let unimodal = match (&model, &prs) {
        (ModelId::Scalar(assoc), PrsId::ScoreBalanced) => {
            let x = single_x(args)?;
            let t_grid: Vec<f64> = (0..=2000).map(|i| -10.0 + 0.01 * i as f64).collect();
            Some(check_unimodal_condition(score_model(assoc.model())?, x, &t_grid))
        }
        _ => None,
    };
    let text = match args.format {
        Format::Csv | Format::Text => {
            let mut s = comment_line("pl-curve", args);
            if let Some(u) = &unimodal {
                let _ = writeln!(s, "# unimodal {}", serde_json::to_string(u).expect("serializes"));
            }
            s.push_str("theta,plausibility,belief\n");
            for (t, pl, bel) in &rows {
                let _ = writeln!(s, "{},{},{}", fmt_f(*t), fmt_f(*pl), fmt_f(*bel));
            }
            s
        }
        Format::Json => {
            let results: Vec<Value> = rows
                .iter()
                .map(|(t, pl, bel)| json!({"theta": t, "plausibility": pl, "belief": bel}))
                .collect();
            render_json(
                args,
                Value::Array(results),
                json!({"points": rows.len(), "unimodal": unimodal}),
            )
        }
    };
    Ok(Output {
        text: finish(args.format, text),
        calibration_failed: false,
    })
}

fn cmd_interval(args: &CommonArgs) -> CliResult<Output> {
    check_alpha(args.alpha)?;
    let model = parse_model(&args.model)?;
    let prs = parse_prs(&args.prs)?;
    let search = GridSpec {
        bracket: args.grid.map(|g| (g.lo, g.hi)),
        points: args.grid.map_or(512, |g| g.count.max(2)),
        ..GridSpec::default()
    };
    let region = match &model {
        ModelId::Scalar(assoc) => {
            let x = single_x(args)?;
            assoc.check_observation(x)?;
            match &prs {
                PrsId::Named(p) => plausibility_region(assoc, p, x, args.alpha, &search)?,
                PrsId::ScoreBalanced => {
                    score_model(assoc.model())?;
                    let (lo, hi, log_scale) = auto_bracket(assoc.model(), x);
                    let bracket = search.bracket.unwrap_or((lo, hi));
                    region_from_curve(
                        |t| scalar_pl(assoc, &prs, x, t),
                        args.alpha,
                        bracket,
                        search.points,
                        log_scale && bracket.0 > 0.0,
                        search.tol,
                    )?
                }
            }
        }
        ModelId::Psi => {
            let (lo, hi) = psi_interval(&normal_sample(args)?, args.alpha)?;
            PlausibilityRegion {
                alpha: args.alpha,
                intervals: vec![(lo, hi)],
                truncated: false,
            }
        }
        ModelId::Rates => return Err(config("interval is not defined for the rates model")),
    };
    let text = match args.format {
        Format::Csv | Format::Text => {
            let mut s = comment_line("interval", args);
            s.push_str("alpha,lower,upper\n");
            for (lo, hi) in &region.intervals {
                let _ = writeln!(s, "{},{},{}", fmt_f(args.alpha), fmt_f(*lo), fmt_f(*hi));
            }
            s
        }
        Format::Json => render_json(
            args,
            serde_json::to_value(&region.intervals).expect("serializes"),
            json!({"empty": region.is_empty(), "truncated": region.truncated}),
        ),
    };
    Ok(Output {
        text: finish(args.format, text),
        calibration_failed: false,
    })
}

fn cmd_test(args: &TestArgs) -> CliResult<Output> {
    let c = &args.common;
    check_alpha(c.alpha)?;
    let model = parse_model(&c.model)?;
    let prs = parse_prs(&c.prs)?;
    let parse_assertion = || -> CliResult<Assertion> {
        let a = args
            .assertion
            .as_deref()
            .ok_or_else(|| config("--assertion is required"))?;
        Ok(a.parse()?)
    };
    let (label, bel, pl, se) = match &model {
        ModelId::Scalar(assoc) => {
            let x = single_x(c)?;
            assoc.check_observation(x)?;
            let a = parse_assertion()?;
            match &prs {
                PrsId::Named(p) => {
                    let r = belief_exact(assoc, p, x, &a)?;
                    (
                        args.assertion.clone().unwrap_or_default(),
                        r.belief,
                        r.plausibility,
                        0.0,
                    )
                }
                PrsId::ScoreBalanced => {
                    let m = score_model(assoc.model())?;
                    let (b, p) = match a {
                        Assertion::ComplementOfPoint(t0) => (two_sided_belief_at(m, t0, x, DEFAULT_TOL)?, 1.0),
                        Assertion::Point(t0) => (0.0, 1.0 - two_sided_belief_at(m, t0, x, DEFAULT_TOL)?),
                        _ => {
                            return Err(config(
                                "score-balanced sets support point and complement assertions only",
                            ))
                        }
                    };
                    (args.assertion.clone().unwrap_or_default(), b, p, 0.0)
                }
            }
        }
        ModelId::Psi => {
            let s = normal_sample(c)?;
            match parse_assertion()? {
                Assertion::Point(psi) => (format!("point:{psi}"), 0.0, psi_plausibility(&s, psi)?, 0.0),
                Assertion::ComplementOfPoint(psi) => {
                    (format!("complement:{psi}"), 1.0 - psi_plausibility(&s, psi)?, 1.0, 0.0)
                }
                _ => return Err(config("psi supports point and complement assertions only")),
            }
        }
        ModelId::Rates => {
            let sample = RatesSample::new(c.x.clone())?;
            let r = rates_plausibility(&sample, c.reps, &RandomStream::new(c.seed, 0))?;
            (
                "equal-rates".to_string(),
                r.belief,
                r.plausibility,
                r.mc_se_plausibility,
            )
        }
    };
    let decision = decide(pl, c.alpha);
    let dec = match decision {
        Decision::Reject => "reject",
        Decision::Retain => "retain",
    };
    let text = match c.format {
        Format::Csv | Format::Text => {
            let mut s = comment_line("test", args);
            s.push_str("assertion,belief,plausibility,mc_se,alpha,decision\n");
            let _ = writeln!(
                s,
                "{label},{},{},{},{},{dec}",
                fmt_f(bel),
                fmt_f(pl),
                fmt_f(se),
                fmt_f(c.alpha)
            );
            s
        }
        Format::Json => render_json(
            args,
            json!({"assertion": label, "belief": bel, "plausibility": pl, "mc_se": se, "alpha": c.alpha, "decision": dec}),
            json!({}),
        ),
    };
    Ok(Output {
        text: finish(c.format, text),
        calibration_failed: false,
    })
}

fn cmd_validate(args: &ValidateArgs) -> CliResult<Output> {
    let c = &args.common;
    if c.reps == 0 {
        return Err(config("--reps must be at least 1"));
    }
    let stream = RandomStream::new(c.seed, 0);
    let model = parse_model(&c.model)?;
    let prs = parse_prs(&c.prs)?;
    let mut reports: Vec<CalibrationReport> = Vec::new();
    match (args.mode, &model, &prs) {
        (ValidateMode::Prs, _, PrsId::Named(p)) => {
            reports.push(check_prs_validity(p, c.reps, &DEFAULT_ALPHAS, &stream)?);
        }
        (ValidateMode::Prs, _, PrsId::ScoreBalanced) => {
            return Err(config("score-balanced sets are checked with --mode im"));
        }
        (ValidateMode::Im, ModelId::Scalar(assoc), PrsId::Named(p)) => {
            let grid = match c.grid {
                Some(g) => g.points(),
                None => default_validity_grid(assoc.model()),
            };
            match &args.assertion {
                None => reports.push(check_point_validity(assoc, p, &grid, &DEFAULT_ALPHAS, c.reps, &stream)?),
                Some(text) => {
                    let a: Assertion = text.parse()?;
                    let (inside, outside): (Vec<f64>, Vec<f64>) = grid.iter().partition(|t| a.contains(**t));
                    if let Assertion::Point(t0) = a {
                        reports.push(check_im_validity(
                            assoc,
                            p,
                            &a,
                            &[t0],
                            &DEFAULT_ALPHAS,
                            c.reps,
                            ValidityForm::Plausibility,
                            &stream.substream(0),
                        )?);
                    } else if !inside.is_empty() {
                        reports.push(check_im_validity(
                            assoc,
                            p,
                            &a,
                            &inside,
                            &DEFAULT_ALPHAS,
                            c.reps,
                            ValidityForm::Plausibility,
                            &stream.substream(0),
                        )?);
                    }
                    if !outside.is_empty() && !matches!(a, Assertion::Point(_)) {
                        reports.push(check_im_validity(
                            assoc,
                            p,
                            &a,
                            &outside,
                            &DEFAULT_ALPHAS,
                            c.reps,
                            ValidityForm::Belief,
                            &stream.substream(1),
                        )?);
                    }
                }
            }
        }
        (ValidateMode::Im, ModelId::Scalar(assoc), PrsId::ScoreBalanced) => {
            let m = score_model(assoc.model())?;
            let grid = match c.grid {
                Some(g) => g.points(),
                None => default_validity_grid(assoc.model()),
            };
            for (k, &t0) in grid.iter().enumerate() {
                reports.push(check_score_balanced(
                    m,
                    t0,
                    t0,
                    &DEFAULT_ALPHAS,
                    c.reps,
                    &stream.substream(k as u64),
                )?);
            }
        }
        (ValidateMode::Coverage, ModelId::Scalar(assoc), PrsId::Named(p)) => {
            check_alpha(c.alpha)?;
            let theta = args.theta.unwrap_or(match assoc.model() {
                ScalarModel::Gaussian => 0.0,
                ScalarModel::Poisson => 5.0,
                ScalarModel::Exponential => 1.0,
            });
            reports.push(check_coverage(assoc, p, theta, c.alpha, c.reps, &stream)?);
        }
        (ValidateMode::Coverage, ModelId::Psi, _) => {
            check_alpha(c.alpha)?;
            match c.x.as_slice() {
                [n, mu, sigma] if *n >= 2.0 && n.fract() == 0.0 => {
                    reports.push(check_psi_coverage(*n as u32, *mu, *sigma, c.alpha, c.reps, &stream)?);
                }
                _ => return Err(config("psi coverage takes --x n,mu,sigma")),
            }
        }
        _ => {
            return Err(config(
                "this model and random set have no calibration check in the requested mode",
            ))
        }
    }
    let failed = reports.iter().any(|r| !r.all_pass());
    let text = match c.format {
        Format::Csv | Format::Text => {
            let mut s = comment_line("validate", args);
            s.push_str("target,form,alpha,empirical,mc_se,pass,worst_theta,ks_distance,ks_critical\n");
            for r in &reports {
                let target = serde_json::to_value(r.target).expect("serializes");
                let form = r.form.map_or(String::new(), |f| {
                    serde_json::to_value(f)
                        .expect("serializes")
                        .as_str()
                        .unwrap_or_default()
                        .to_string()
                });
                let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f);
                for j in 0..r.alpha_grid.len() {
                    let _ = writeln!(
                        s,
                        "{},{form},{},{},{},{},{},{},{}",
                        target.as_str().unwrap_or_default(),
                        fmt_f(r.alpha_grid[j]),
                        fmt_f(r.empirical[j]),
                        fmt_f(r.mc_se[j]),
                        r.pass[j],
                        opt(r.worst_theta[j]),
                        opt(r.ks_distance),
                        opt(r.ks_critical),
                    );
                }
            }
            s
        }
        Format::Json => render_json(
            args,
            serde_json::to_value(&reports).expect("serializes"),
            json!({"all_pass": !failed}),
        ),
    };
    Ok(Output {
        text: finish(c.format, text),
        calibration_failed: failed,
    })
}

fn default_validity_grid(model: ScalarModel) -> Vec<f64> {
    match model {
        ScalarModel::Gaussian => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        ScalarModel::Poisson => vec![1.0, 3.0, 5.0, 7.0, 9.0],
        ScalarModel::Exponential => vec![0.5, 1.0, 2.0, 3.0, 4.0],
    }
}

fn cmd_power(args: &PowerArgs) -> CliResult<Output> {
    let c = &args.common;
    check_alpha(c.alpha)?;
    if !c.model.eq_ignore_ascii_case("rates") {
        return Err(config("power studies need --model rates"));
    }
    let ratios = if !args.ratios.is_empty() {
        args.ratios.clone()
    } else {
        c.grid.map_or_else(|| vec![1.0, 1.5, 2.0, 3.0], |g| g.points())
    };
    let cfg = PowerConfig {
        n1: args.n1,
        n2: args.n2,
        alpha: c.alpha,
        n_datasets: args.datasets,
        n_mc: c.reps,
        n_null: args.null_reps,
    };
    let rows = power_study(&ratios, &cfg, &RandomStream::new(c.seed, 0))?;
    let text = match c.format {
        Format::Csv | Format::Text => {
            let mut s = comment_line("power", args);
            s.push_str("theta_ratio,method,power,mc_se,n_datasets,alpha,n1,n2\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    fmt_f(r.theta_ratio),
                    r.method.name(),
                    fmt_f(r.power),
                    fmt_f(r.mc_se),
                    r.n_datasets,
                    fmt_f(r.alpha),
                    r.n1,
                    r.n2
                );
            }
            s
        }
        Format::Json => render_json(
            args,
            serde_json::to_value(&rows).expect("serializes"),
            json!({"rows": rows.len()}),
        ),
    };
    Ok(Output {
        text: finish(c.format, text),
        calibration_failed: false,
    })
}

/// Runs a parsed command and renders its output.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::PlCurve(a) => cmd_pl_curve(a),
        Command::Interval(a) => cmd_interval(a),
        Command::Test(a) => cmd_test(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Power(a) => cmd_power(a),
    }
}

fn out_path(cli: &Cli) -> Option<&PathBuf> {
    match &cli.command {
        Command::PlCurve(a) | Command::Interval(a) => a.out.as_ref(),
        Command::Test(a) => a.common.out.as_ref(),
        Command::Validate(a) => a.common.out.as_ref(),
        Command::Power(a) => a.common.out.as_ref(),
    }
}

/// Parses `args`, runs the command, writes its output and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = execute(&cli).and_then(|out| {
        match out_path(&cli) {
            Some(path) => std::fs::write(path, &out.text)?,
            None => print!("{}", out.text),
        }
        Ok(out)
    });
    match result {
        Ok(out) if out.calibration_failed => {
            eprintln!("calibration check failed");
            EXIT_CALIBRATION
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
