//! The `sepkit` command line.
//!
//! ```text
//! sepkit gen      --dist ball --n 100 --count 1000 --seed 1 --out a.csv
//! sepkit bound    --theorem ball-single --n 50 --m 100 --r 0.9
//! sepkit simulate --experiment ball --variant single --n 50 --m 200 --r 0.9 --trials 1000
//! sepkit fit      --data s.csv --errors idx.txt --out model.json
//! sepkit apply    --model model.json [--model stage2.json] --data x.csv --out flags.csv
//! ```
//!
//! Exit codes: 0 success (or PASS), 1 FAIL verdict or degenerate fit data,
//! 2 I/O or other operational error, 64 bad flags or parameters, 65 input
//! that does not match the model.
//!
//! Diagnostics go to stderr; stdout only carries data and one-line summaries.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::bounds::{self, BallBoundQuery, BoundResult, CubeBoundQuery, EvalPath, TupleBoundQuery};
use crate::corrector::{
    self, ClusterCount, CorrectorModel, FitOptions, LabeledData, RestCovariance,
};
use crate::pointset::read_indices;
use crate::sampling::{self, DistributionSpec};
use crate::separability::{self, BallVariant, CubeVariant, ExperimentConfig, SeparationReport};
use crate::{Error, PointSet};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0x5eed_0001;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_OPERATIONAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

const UNIFORM_VARIANCE: f64 = 1.0 / 12.0;

#[derive(Debug, Parser)]
#[command(
    name = "sepkit",
    version,
    about = "Stochastic separation bounds, simulations and linear correctors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a seeded point sample and write it as CSV.
    Gen(GenArgs),
    /// Evaluate a probability bound or cardinality cap and print it as JSON.
    Bound(BoundArgs),
    /// Run a Monte Carlo experiment and compare it with its bound.
    Simulate(SimulateArgs),
    /// Fit a corrector model from samples and error indices.
    Fit(FitArgs),
    /// Apply one model, or a cascade of models, to a sample.
    Apply(ApplyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Dist {
    Ball,
    Sphere,
    Cube,
    Gauss,
}

#[derive(Debug, clap::Args)]
pub struct GenArgs {
    /// Distribution to draw from.
    #[arg(long, value_enum)]
    pub dist: Dist,
    /// Dimension.
    #[arg(long)]
    pub n: usize,
    /// Number of points.
    #[arg(long)]
    pub count: usize,
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    /// Size of an ε-quasiorthogonal random set (needs --n --eps --theta).
    Prop1,
    /// One ball point separable from the rest (--n --m --r).
    BallSingle,
    /// Every ball point separable from the rest (--n --m --r).
    BallAll,
    /// Every pair of ball points at a bounded angle (--n --m --r).
    BallAngle,
    /// Largest M for the single-point ball bound (--n --r --theta).
    MaxMSingle,
    /// Largest M for the all-points ball bound (--n --r --theta).
    MaxMAll,
    /// One cube point separable (--n --m --delta [--sigma2]).
    CubeSingle,
    /// Every cube point separable (--n --m --delta [--sigma2]).
    CubeAll,
    /// A tuple separable from a sample (--n --m --tuple --beta1 --beta2).
    Tuple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Eval {
    Auto,
    Direct,
    Log,
}

impl From<Eval> for EvalPath {
    fn from(e: Eval) -> Self {
        match e {
            Eval::Auto => EvalPath::Auto,
            Eval::Direct => EvalPath::Direct,
            Eval::Log => EvalPath::LogSpace,
        }
    }
}

/// Numeric parameters shared by `bound` and `simulate`.
#[derive(Debug, Default, clap::Args)]
pub struct Params {
    /// Dimension n.
    #[arg(long)]
    pub n: Option<u64>,
    /// Sample size M.
    #[arg(long)]
    pub m: Option<u64>,
    /// Separation radius r in (0, 1).
    #[arg(long)]
    pub r: Option<f64>,
    /// Orthogonality or tuple tolerance ε.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Admissible failure probability ϑ.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Cube margin δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Per-coordinate variance for the cube [default: 1/12, uniform].
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Tuple size m.
    #[arg(long)]
    pub tuple: Option<u64>,
    /// Largest average tuple correlation β₁.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Smallest average tuple correlation β₂.
    #[arg(long)]
    pub beta2: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    #[command(flatten)]
    pub params: Params,
    /// Evaluation path for the closed forms.
    #[arg(long, value_enum, default_value_t = Eval::Auto)]
    pub eval: Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// N random unit vectors, all pairwise ε-orthogonal (--n --count --eps).
    Orth,
    /// Ball separation events (--variant single|all|angle --n --m --r).
    Ball,
    /// Cube separation events (--variant single|all --n --m --delta [--sigma2]).
    Cube,
    /// Tuple separation (--n --m --tuple --beta1 --beta2).
    Tuple,
    /// Fisher discriminant isolates one ball point (--n --m).
    Fisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Single,
    All,
    Angle,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    #[arg(long, value_enum, default_value_t = Variant::Single)]
    pub variant: Variant,
    #[command(flatten)]
    pub params: Params,
    /// Number of vectors N for the orthogonality experiment.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; the report does not depend on this.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Report path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Sample CSV, one row per point.
    #[arg(long)]
    pub data: PathBuf,
    /// Error indices, one 0-based row index per line.
    #[arg(long)]
    pub errors: PathBuf,
    /// Model JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of error clusters: `auto` or an upper limit.
    #[arg(long, default_value = "auto", value_parser = parse_clusters)]
    pub clusters: ClusterCount,
    /// Minimum average cosine within a cluster.
    #[arg(long, default_value_t = 0.5)]
    pub beta_threshold: f64,
    /// Fraction of the variance kept by the PCA projection.
    #[arg(long, default_value_t = 0.999)]
    pub variance_fraction: f64,
    /// Largest eigenvalue ratio before the whitener is regularized.
    #[arg(long, default_value_t = 1e6)]
    pub cond_cap: f64,
    /// Lower each threshold by this fraction of its cluster's score spread.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    /// Share the whole-sample covariance between clusters (faster, approximate).
    #[arg(long)]
    pub global_covariance: bool,
}

#[derive(Debug, clap::Args)]
pub struct ApplyArgs {
    /// Model JSON; repeat for a cascade, applied in order.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    /// Decision CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_clusters(s: &str) -> Result<ClusterCount, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(ClusterCount::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("cluster count must be at least 1".into()),
        Ok(p) => Ok(ClusterCount::AtMost(p)),
        Err(_) => Err(format!("expected `auto` or a positive integer, got {s:?}")),
    }
}

/// A failed command: exit code plus diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

type CmdResult = Result<i32, Failure>;

fn missing(flag: &str, what: &str) -> Failure {
    Failure::usage(format!("missing required flag --{flag} for {what}"))
}

fn need<T: Copy>(v: Option<T>, flag: &str, what: &str) -> Result<T, Failure> {
    v.ok_or_else(|| missing(flag, what))
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_OPERATIONAL, format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn load_points(path: &Path) -> Result<PointSet, Failure> {
    PointSet::load_csv(path).map_err(|e| match e {
        Error::Io(e) => io_failure(path, e),
        other => Failure::new(EXIT_DATA, format!("{}: {other}", path.display())),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let _ = write!(stderr, "{rendered}");
                    if !rendered.contains("Usage:") {
                        let _ = writeln!(stderr, "\n{}", usage_for(&args));
                    }
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Bound(a) => cmd_bound(&a, stdout),
        Command::Simulate(a) => cmd_simulate(&a, stdout),
        Command::Fit(a) => cmd_fit(&a, stdout),
        Command::Apply(a) => cmd_apply(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "sepkit: {}", f.message);
            f.code
        }
    }
}

fn usage_for(args: &[OsString]) -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    let sub = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_string);
    match sub.and_then(|name| cmd.find_subcommand_mut(&name).map(|c| c.render_usage())) {
        Some(u) => u.to_string().replacen("Usage: ", "Usage: sepkit ", 1),
        None => cmd.render_usage().to_string(),
    }
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> CmdResult {
    let spec = match a.dist {
        Dist::Ball => DistributionSpec::unit_ball(a.n),
        Dist::Sphere => DistributionSpec::unit_sphere(a.n),
        Dist::Cube => DistributionSpec::uniform_cube(a.n),
        Dist::Gauss => DistributionSpec::standard_gaussian(a.n),
    };
    let ps = sampling::sample(&spec, a.count, a.seed).map_err(|e| Failure::usage(e.to_string()))?;
    let mut out = create(&a.out)?;
    ps.write_csv(&mut out)
        .and_then(|_| out.flush().map_err(Error::from))
        .map_err(|e| io_failure(&a.out, e))?;
    let s = sampling::radial_statistics(&ps);
    let _ = writeln!(
        stdout,
        "gen: count={} n={} kind={} seed={} min_norm={:.6} max_norm={:.6} mean_square_norm={:.6}",
        ps.len(),
        ps.dim(),
        spec.kind().as_str(),
        a.seed,
        s.min_norm,
        s.max_norm,
        s.mean_square_norm
    );
    Ok(EXIT_OK)
}

fn param_map(p: &Params) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("n", p.n.map(Value::from));
    put("M", p.m.map(Value::from));
    put("r", p.r.map(Value::from));
    put("eps", p.eps.map(Value::from));
    put("theta", p.theta.map(Value::from));
    put("delta", p.delta.map(Value::from));
    put("sigma2", p.sigma2.map(Value::from));
    put("m", p.tuple.map(Value::from));
    put("beta1", p.beta1.map(Value::from));
    put("beta2", p.beta2.map(Value::from));
    m
}

fn cube_query(p: &Params, what: &str) -> Result<CubeBoundQuery, Failure> {
    let n = need(p.n, "n", what)?;
    let m = need(p.m, "m", what)?;
    let delta = need(p.delta, "delta", what)?;
    let sigma2 = p.sigma2.unwrap_or(UNIFORM_VARIANCE);
    CubeBoundQuery::new(m, delta, vec![sigma2; n as usize])
        .map_err(|e| Failure::usage(e.to_string()))
}

fn ball_query(p: &Params, what: &str) -> Result<BallBoundQuery, Failure> {
    BallBoundQuery::new(
        need(p.n, "n", what)?,
        need(p.m, "m", what)?,
        need(p.r, "r", what)?,
    )
    .map_err(|e| Failure::usage(e.to_string()))
}

fn tuple_query(p: &Params, what: &str) -> Result<TupleBoundQuery, Failure> {
    TupleBoundQuery::new(
        need(p.n, "n", what)?,
        need(p.m, "m", what)?,
        need(p.tuple, "tuple", what)?,
        need(p.beta1, "beta1", what)?,
        need(p.beta2, "beta2", what)?,
    )
    .map_err(|e| Failure::usage(e.to_string()))
}

/// Evaluates the bound named by `a`; errors are usage errors.
pub fn evaluate_bound(a: &BoundArgs) -> Result<BoundResult, Failure> {
    let p = &a.params;
    let path = EvalPath::from(a.eval);
    let name = a
        .theorem
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_string();
    let what = name.as_str();
    let usage = |e: Error| Failure::usage(e.to_string());
    Ok(match a.theorem {
        Theorem::Prop1 => bounds::quasiorthogonal_set_size(
            need(p.n, "n", what)?,
            need(p.eps, "eps", what)?,
            need(p.theta, "theta", what)?,
        )
        .map_err(usage)?,
        Theorem::BallSingle => bounds::ball_single_bound_with(&ball_query(p, what)?, path),
        Theorem::BallAll => bounds::ball_all_bound_with(&ball_query(p, what)?, path),
        Theorem::BallAngle => bounds::ball_angle_bound_with(&ball_query(p, what)?, path),
        Theorem::MaxMSingle => bounds::max_cardinality_single_with(
            need(p.n, "n", what)?,
            need(p.r, "r", what)?,
            need(p.theta, "theta", what)?,
            path,
        )
        .map_err(usage)?,
        Theorem::MaxMAll => bounds::max_cardinality_all_with(
            need(p.n, "n", what)?,
            need(p.r, "r", what)?,
            need(p.theta, "theta", what)?,
            path,
        )
        .map_err(usage)?,
        Theorem::CubeSingle => bounds::cube_single_bound_with(&cube_query(p, what)?, path),
        Theorem::CubeAll => bounds::cube_all_bound_with(&cube_query(p, what)?, path),
        Theorem::Tuple => bounds::tuple_bound(&tuple_query(p, what)?).map_err(usage)?,
    })
}

fn cmd_bound(a: &BoundArgs, stdout: &mut dyn Write) -> CmdResult {
    let result = evaluate_bound(a)?;
    let mut doc = Map::new();
    doc.insert("version".into(), crate::VERSION.into());
    let name = a
        .theorem
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_string();
    doc.insert("theorem".into(), name.into());
    doc.insert("params".into(), Value::Object(param_map(&a.params)));
    if let Value::Object(fields) = serde_json::to_value(&result).expect("bound serializes") {
        doc.extend(fields);
    }
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
    let _ = writeln!(stdout, "{text}");
    Ok(EXIT_OK)
}

/// Runs the experiment named by `a`.
pub fn run_experiment(a: &SimulateArgs) -> Result<SeparationReport, Failure> {
    let p = &a.params;
    let mut cfg = ExperimentConfig::new(a.trials, a.seed);
    if let Some(j) = a.jobs {
        cfg = cfg.with_jobs(j);
    }
    let operational = |e: Error| Failure::new(EXIT_OPERATIONAL, e.to_string());
    let what = a
        .experiment
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_string();
    let what = what.as_str();
    match a.experiment {
        Experiment::Orth => {
            let n = need(p.n, "n", what)?;
            let count = need(a.count, "count", what)?;
            let eps = need(p.eps, "eps", what)?;
            separability::orthogonality_experiment(n as usize, count, eps, &cfg)
        }
        Experiment::Ball => {
            let variant = match a.variant {
                Variant::Single => BallVariant::Single,
                Variant::All => BallVariant::All,
                Variant::Angle => BallVariant::Angle,
            };
            separability::ball_experiment(&ball_query(p, what).map_err(retag)?, variant, &cfg)
        }
        Experiment::Cube => {
            let variant = match a.variant {
                Variant::Single => CubeVariant::Single,
                Variant::All => CubeVariant::All,
                Variant::Angle => {
                    return Err(Failure::usage(
                        "--variant angle applies to the ball experiment only",
                    ))
                }
            };
            separability::cube_experiment(&cube_query(p, what).map_err(retag)?, variant, &cfg)
        }
        Experiment::Tuple => {
            separability::tuple_experiment(&tuple_query(p, what).map_err(retag)?, &cfg)
        }
        Experiment::Fisher => {
            let n = need(p.n, "n", what)?;
            let m = need(p.m, "m", what)?;
            separability::fisher_separability_experiment(n as usize, m as usize, &cfg)
        }
    }
    .map_err(operational)
}

// Missing flags stay usage errors; out-of-range values are reported like
// any other experiment error.
fn retag(f: Failure) -> Failure {
    if f.message.starts_with("missing required flag") {
        f
    } else {
        Failure::new(EXIT_OPERATIONAL, f.message)
    }
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> CmdResult {
    let report = run_experiment(a)?;
    let text = report.to_json();
    match &a.out {
        Some(path) => {
            let mut out = create(path)?;
            writeln!(out, "{text}")
                .and_then(|_| out.flush())
                .map_err(|e| io_failure(path, e))?;
            let _ = writeln!(
                stdout,
                "simulate: trials={} successes={} frequency={:.6} wilson99=[{:.6}, {:.6}] bound={:.6} verdict={}",
                report.trials,
                report.successes,
                report.frequency,
                report.wilson99[0],
                report.wilson99[1],
                report.bound,
                if report.passed() { "PASS" } else { "FAIL" }
            );
        }
        None => {
            let _ = writeln!(stdout, "{text}");
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_fit(a: &FitArgs, stdout: &mut dyn Write) -> CmdResult {
    let samples = load_points(&a.data)?;
    let file = File::open(&a.errors).map_err(|e| io_failure(&a.errors, e))?;
    let errors = read_indices(file).map_err(|e| match e {
        Error::Io(e) => io_failure(&a.errors, e),
        other => Failure::usage(format!("{}: {other}", a.errors.display())),
    })?;
    let data = LabeledData::new(samples, errors).map_err(|e| Failure::usage(e.to_string()))?;
    let options = FitOptions {
        variance_fraction: a.variance_fraction,
        cond_cap: a.cond_cap,
        clusters: a.clusters,
        beta_threshold: a.beta_threshold,
        margin: a.margin,
        rest_covariance: if a.global_covariance {
            RestCovariance::Global
        } else {
            RestCovariance::PerCluster
        },
    };
    let model = corrector::fit(&data, &options).map_err(|e| match e {
        Error::Parameter(_) => Failure::usage(e.to_string()),
        other => Failure::new(EXIT_FAIL, format!("fit failed: {other}")),
    })?;

    let flagged = data
        .errors()
        .iter()
        .filter(|&&i| {
            corrector::apply(&model, data.samples().row(i))
                .map(|d| d.flagged)
                .unwrap_or(false)
        })
        .count();
    let recall = flagged as f64 / data.errors().len() as f64;

    let mut out = create(&a.out)?;
    model
        .write_json(&mut out)
        .and_then(|_| out.flush().map_err(Error::from))
        .map_err(|e| io_failure(&a.out, e))?;
    let sizes: Vec<String> = model
        .units
        .iter()
        .map(|u| u.cluster_size.to_string())
        .collect();
    let _ = writeln!(
        stdout,
        "fit: n={} m={} units={} cluster_sizes=[{}] retained_variance={:.6} training_recall={:.6}",
        model.input_dim(),
        model.output_dim(),
        model.units.len(),
        sizes.join(","),
        model.pipeline.retained_variance(),
        recall
    );
    Ok(EXIT_OK)
}

fn cmd_apply(a: &ApplyArgs, stdout: &mut dyn Write) -> CmdResult {
    let models = a
        .models
        .iter()
        .map(|path| {
            CorrectorModel::load(path).map_err(|e| match e {
                Error::Io(e) => io_failure(path, e),
                other => Failure::new(EXIT_DATA, format!("{}: {other}", path.display())),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = load_points(&a.data)?;
    for (k, m) in models.iter().enumerate() {
        if m.input_dim() != data.dim() {
            return Err(Failure::new(
                EXIT_DATA,
                format!(
                    "model {} expects n={}, data {} has n={}",
                    a.models[k].display(),
                    m.input_dim(),
                    a.data.display(),
                    data.dim()
                ),
            ));
        }
    }
    let decisions = corrector::cascade_apply_set(&models, &data)
        .map_err(|e| Failure::new(EXIT_OPERATIONAL, e.to_string()))?;

    let mut out = create(&a.out)?;
    let mut flagged = 0usize;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "index,flagged,fired_units,max_score,first_stage")?;
        for (i, d) in decisions.iter().enumerate() {
            let shown = d.first_stage.map(|s| &d.stages[s]);
            let fired: Vec<String> = shown
                .map(|s| s.fired_units.iter().map(|u| u.to_string()).collect())
                .unwrap_or_default();
            let max_score = d
                .stages
                .iter()
                .filter_map(|s| s.max_score())
                .reduce(f64::max)
                .map(|v| format!("{v:.17e}"))
                .unwrap_or_default();
            let stage = d.first_stage.map(|s| s.to_string()).unwrap_or_default();
            if d.flagged() {
                flagged += 1;
            }
            writeln!(
                out,
                "{i},{},{},{max_score},{stage}",
                u8::from(d.flagged()),
                fired.join(";")
            )?;
        }
        out.flush()
    };
    write().map_err(|e| io_failure(&a.out, e))?;
    let _ = writeln!(
        stdout,
        "apply: rows={} stages={} flagged={}",
        decisions.len(),
        models.len(),
        flagged
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("sepkit").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_capture(&["--help"]).0, 0);
        assert_eq!(run_capture(&["--version"]).0, 0);
        assert_eq!(run_capture(&["bound", "--help"]).0, 0);
    }

    #[test]
    fn bad_flags_exit_64() {
        assert_eq!(run_capture(&["gen", "--dist", "torus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) =
            run_capture(&["bound", "--theorem", "ball-single", "--n", "5", "--m", "3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--r"), "{err}");
    }

    #[test]
    fn bound_ball_single_trivial() {
        let (code, out, _) = run_capture(&[
            "bound",
            "--theorem",
            "ball-single",
            "--m",
            "1",
            "--r",
            "0.5",
            "--n",
            "2",
        ]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(v["version"], crate::VERSION);
    }

    #[test]
    fn bound_out_of_range_is_usage() {
        let (code, _, _) = run_capture(&[
            "bound",
            "--theorem",
            "ball-all",
            "--n",
            "5",
            "--m",
            "3",
            "--r",
            "1.5",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn clusters_flag() {
        assert_eq!(parse_clusters("auto"), Ok(ClusterCount::Auto));
        assert_eq!(parse_clusters("3"), Ok(ClusterCount::AtMost(3)));
        assert!(parse_clusters("0").is_err());
        assert!(parse_clusters("x").is_err());
    }
}
