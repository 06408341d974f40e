//! Monte Carlo harnesses for the separation events.
//!
//! Each experiment draws a fresh sample per trial, tests the event exactly as
//! the matching bound in [`crate::bounds`] states it, and compares the success
//! frequency with the bound. The verdict is `PASS` iff
//! `frequency ≥ bound − h`, where `h` is the halfwidth of the 99% Wilson
//! interval around the frequency.
//!
//! Trial `i` draws from `rng::stream(master_seed, i)`, so reports are
//! identical for any degree of parallelism. Every hundredth trial is re-checked
//! with an independent exhaustive predicate; disagreements are counted in
//! `detail.spot_check_failures`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bounds::{self, BallBoundQuery, CubeBoundQuery, TupleBoundQuery};
use crate::numerics::{self, SymmetricMatrix};
use crate::rng::{self, StreamRng};
use crate::sampling::{DistributionSpec, PointSampler};
use crate::stats::{self, Interval};
use crate::{Error, Result};

/// Resampling cap for the tuple correlation condition, per trial.
pub const TUPLE_MAX_ATTEMPTS: usize = 10_000;

const SPOT_CHECK_EVERY: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub trials: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            trials,
            master_seed,
            jobs: None,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = Some(jobs);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.jobs == Some(0) {
            return Err(Error::param("jobs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallVariant {
    Single,
    All,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeVariant {
    Single,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub version: String,
    pub event: String,
    pub params: serde_json::Value,
    pub trials: u64,
    pub successes: u64,
    pub frequency: f64,
    pub wilson99: [f64; 2],
    pub bound: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximizer_detail: Option<BTreeMap<String, f64>>,
    pub detail: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SeparationReport {
    fn build(
        event: &str,
        params: serde_json::Value,
        trials: u64,
        successes: u64,
        bound: f64,
    ) -> Self {
        let interval = stats::wilson99(successes, trials);
        let frequency = successes as f64 / trials as f64;
        SeparationReport {
            version: crate::VERSION.to_string(),
            event: event.to_string(),
            params,
            trials,
            successes,
            frequency,
            wilson99: [interval.lo, interval.hi],
            bound,
            verdict: verdict(frequency, &interval, bound),
            maximizer_detail: None,
            detail: BTreeMap::new(),
            note: None,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.wilson99[0],
            hi: self.wilson99[1],
        }
    }

    pub fn halfwidth(&self) -> f64 {
        self.interval().halfwidth()
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn set(&mut self, key: &str, v: f64) {
        self.detail.insert(key.to_string(), v);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `PASS` iff `frequency ≥ bound − halfwidth`.
pub fn verdict(frequency: f64, interval: &Interval, bound: f64) -> Verdict {
    if frequency >= bound - interval.halfwidth() {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    success: bool,
    spot_checked: bool,
    spot_mismatch: bool,
    flagged: bool,
    count: u64,
}

#[derive(Debug, Default)]
struct Tally {
    successes: u64,
    spot_checks: u64,
    spot_failures: u64,
    flagged: u64,
    count: u64,
}

fn run_trials<F>(cfg: &ExperimentConfig, trial: F) -> Result<Tally>
where
    F: Fn(u64, &mut StreamRng) -> Result<Outcome> + Sync,
{
    cfg.validate()?;
    let work = || -> Result<Vec<Outcome>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::stream(cfg.master_seed, i);
                trial(i, &mut rng)
            })
            .collect()
    };
    let outcomes = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::param(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut t = Tally::default();
    for o in outcomes {
        t.successes += o.success as u64;
        t.spot_checks += o.spot_checked as u64;
        t.spot_failures += o.spot_mismatch as u64;
        t.flagged += o.flagged as u64;
        t.count += o.count;
    }
    Ok(t)
}

fn spot_check(i: u64) -> bool {
    i.is_multiple_of(SPOT_CHECK_EVERY)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn draw(sampler: &PointSampler, rng: &mut StreamRng, count: usize) -> Vec<f64> {
    let mut buf = vec![0.0; count * sampler.dim()];
    sampler.fill(rng, &mut buf);
    buf
}

fn with_spot_check(index: u64, success: bool, recheck: impl FnOnce() -> bool) -> Outcome {
    let spot_checked = spot_check(index);
    let spot_mismatch = spot_checked && recheck() != success;
    Outcome {
        success,
        spot_checked,
        spot_mismatch,
        ..Outcome::default()
    }
}

fn attach_spot_checks(report: &mut SeparationReport, t: &Tally) {
    report.set("spot_checks", t.spot_checks as f64);
    report.set("spot_check_failures", t.spot_failures as f64);
}

// ---------------------------------------------------------------------------
// Event predicates
// ---------------------------------------------------------------------------

/// Number of pairs `i < j` with `|(x_i, x_j)| ≥ ε`.
pub fn orthogonality_violations(points: &[f64], dim: usize, eps: f64) -> u64 {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let mut count = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if dot(rows[i], rows[j]).abs() >= eps {
                count += 1;
            }
        }
    }
    count
}

/// `‖x_M‖ > r` and `(x_i, x_M/‖x_M‖) < r` for every other row, where `x_M`
/// is the last row.
pub fn last_point_separated(points: &[f64], dim: usize, r: f64) -> bool {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let (last, rest) = rows.split_last().expect("non-empty sample");
    point_separated(last, rest.iter().copied(), r)
}

fn point_separated<'a>(target: &[f64], others: impl Iterator<Item = &'a [f64]>, r: f64) -> bool {
    let len = norm(target);
    if !(len > r) {
        return false;
    }
    let unit: Vec<f64> = target.iter().map(|x| x / len).collect();
    others.into_iter().all(|x| dot(x, &unit) < r)
}

/// Every row `j` satisfies `‖x_j‖ > r` and `(x_i, x_j/‖x_j‖) < r` for `i ≠ j`.
pub fn all_points_separated(points: &[f64], dim: usize, r: f64) -> bool {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let norms: Vec<f64> = rows.iter().map(|x| norm(x)).collect();
    if norms.iter().any(|&l| !(l > r)) {
        return false;
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let g = dot(rows[i], rows[j]);
            if g >= r * norms[j] || g >= r * norms[i] {
                return false;
            }
        }
    }
    true
}

/// Every row has norm `> r` and every pair has cosine `< r`.
pub fn all_angles_separated(points: &[f64], dim: usize, r: f64) -> bool {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let norms: Vec<f64> = rows.iter().map(|x| norm(x)).collect();
    if norms.iter().any(|&l| !(l > r)) {
        return false;
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if dot(rows[i], rows[j]) >= r * norms[i] * norms[j] {
                return false;
            }
        }
    }
    true
}

/// The cube event: every centred row has `‖x_j − x̄‖²/R₀² ∈ [1−δ, 1+δ]`, and
/// `((x_i − x̄)/R₀, (x_j − x̄)/‖x_j − x̄‖) < √(1−δ)` for `i ≠ j`, with `j`
/// ranging over the last row only (`all = false`) or every row.
pub fn cube_event(
    points: &[f64],
    dim: usize,
    center: &[f64],
    r0_squared: f64,
    delta: f64,
    all: bool,
) -> bool {
    let centered: Vec<Vec<f64>> = points
        .chunks_exact(dim)
        .map(|x| x.iter().zip(center).map(|(a, c)| a - c).collect())
        .collect();
    let sq: Vec<f64> = centered.iter().map(|x| dot(x, x)).collect();
    if sq
        .iter()
        .any(|&s| !(s / r0_squared >= 1.0 - delta && s / r0_squared <= 1.0 + delta))
    {
        return false;
    }
    let r0 = r0_squared.sqrt();
    let limit = (1.0 - delta).sqrt();
    let targets: Vec<usize> = if all {
        (0..centered.len()).collect()
    } else {
        vec![centered.len() - 1]
    };
    for &j in &targets {
        let len_j = sq[j].sqrt();
        for (i, xi) in centered.iter().enumerate() {
            if i != j && dot(xi, &centered[j]) / (r0 * len_j) >= limit {
                return false;
            }
        }
    }
    true
}

/// Whether `(x, u) < threshold` for all `xs` and `(y, u) ≥ threshold` for all
/// `ys`, with `u = ȳ/‖ȳ‖`.
pub fn tuple_separated(xs: &[f64], ys: &[f64], dim: usize, threshold: f64) -> bool {
    let m = ys.len() / dim;
    let mut mean = vec![0.0; dim];
    for y in ys.chunks_exact(dim) {
        for (a, b) in mean.iter_mut().zip(y) {
            *a += b / m as f64;
        }
    }
    let len = norm(&mean);
    if !(len > 0.0) {
        return false;
    }
    let unit: Vec<f64> = mean.iter().map(|x| x / len).collect();
    ys.chunks_exact(dim).all(|y| dot(y, &unit) >= threshold)
        && xs.chunks_exact(dim).all(|x| dot(x, &unit) < threshold)
}

/// Per-row sums `Σ_{j≠i} (y_i, y_j)`.
pub fn correlation_sums(ys: &[f64], dim: usize) -> Vec<f64> {
    let rows: Vec<&[f64]> = ys.chunks_exact(dim).collect();
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| dot(rows[i], rows[j]))
                .sum()
        })
        .collect()
}

fn correlation_condition(ys: &[f64], dim: usize, beta1: f64, beta2: f64) -> bool {
    let m1 = (ys.len() / dim) as f64 - 1.0;
    correlation_sums(ys, dim)
        .into_iter()
        .all(|s| beta2 * m1 <= s && s <= beta1 * m1)
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// `count` uniform unit vectors per trial; success iff all pairs are
/// `ε`-orthogonal. Compared against the confidence `exp(−N² e^{−ε²n/2})`
/// implied by the quasi-orthogonal set size formula at `N = count`.
pub fn orthogonality_experiment(
    dim: usize,
    count: usize,
    eps: f64,
    cfg: &ExperimentConfig,
) -> Result<SeparationReport> {
    if count < 2 {
        return Err(Error::param(
            "orthogonality experiment needs at least 2 vectors",
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps = {eps} must be positive")));
    }
    let sampler = PointSampler::new(&DistributionSpec::unit_sphere(dim))?;
    let tally = run_trials(cfg, |i, rng| {
        let pts = draw(&sampler, rng, count);
        let violations = orthogonality_violations(&pts, dim, eps);
        let mut o = with_spot_check(i, violations == 0, || {
            let rows: Vec<&[f64]> = pts.chunks_exact(dim).collect();
            rows.iter().enumerate().all(|(a, x)| {
                rows.iter()
                    .enumerate()
                    .all(|(b, y)| a == b || dot(x, y).abs() < eps)
            })
        });
        o.count = violations;
        Ok(o)
    })?;
    let bound = bounds::quasiorthogonal_confidence(dim as u64, eps, count as u64);
    let params = json!({"n": dim, "N": count, "eps": eps, "seed": cfg.master_seed});
    let mut report = SeparationReport::build(
        "pairwise eps-orthogonality of N random unit vectors",
        params,
        cfg.trials,
        tally.successes,
        bound,
    );
    let pairs = cfg.trials * (count as u64 * (count as u64 - 1) / 2);
    report.set("implied_theta", 1.0 - bound);
    report.set("pair_violations", tally.count as f64);
    report.set("pairs_tested", pairs as f64);
    report.set("pair_violation_rate", tally.count as f64 / pairs as f64);
    report.set(
        "pair_violation_bound",
        2.0 * (-0.5 * dim as f64 * eps * eps).exp(),
    );
    attach_spot_checks(&mut report, &tally);
    Ok(report)
}

pub fn ball_experiment(
    q: &BallBoundQuery,
    variant: BallVariant,
    cfg: &ExperimentConfig,
) -> Result<SeparationReport> {
    let dim = q.dim as usize;
    let m = q.sample_size as usize;
    let r = q.r;
    let sampler = PointSampler::new(&DistributionSpec::unit_ball(dim))?;
    let tally = run_trials(cfg, |i, rng| {
        let pts = draw(&sampler, rng, m);
        let success = match variant {
            BallVariant::Single => last_point_separated(&pts, dim, r),
            BallVariant::All => all_points_separated(&pts, dim, r),
            BallVariant::Angle => all_angles_separated(&pts, dim, r),
        };
        Ok(with_spot_check(i, success, || {
            naive_ball_event(&pts, dim, r, variant)
        }))
    })?;
    let (event, bound) = match variant {
        BallVariant::Single => (
            "ball: last point separated from the rest",
            bounds::ball_single_bound(q),
        ),
        BallVariant::All => (
            "ball: every point separated from the rest",
            bounds::ball_all_bound(q),
        ),
        BallVariant::Angle => (
            "ball: every pairwise cosine below r",
            bounds::ball_angle_bound(q),
        ),
    };
    let variant_name = match variant {
        BallVariant::Single => "single",
        BallVariant::All => "all",
        BallVariant::Angle => "angle",
    };
    let params = json!({"n": q.dim, "M": q.sample_size, "r": r, "variant": variant_name, "seed": cfg.master_seed});
    let mut report =
        SeparationReport::build(event, params, cfg.trials, tally.successes, bound.value);
    attach_spot_checks(&mut report, &tally);
    Ok(report)
}

/// Exhaustive form of the ball events with explicit normalisation.
fn naive_ball_event(points: &[f64], dim: usize, r: f64, variant: BallVariant) -> bool {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let m = rows.len();
    let targets: Vec<usize> = match variant {
        BallVariant::Single => vec![m - 1],
        _ => (0..m).collect(),
    };
    let mut ok = true;
    for &j in &targets {
        let nj = norm(rows[j]);
        ok &= nj > r;
        let uj: Vec<f64> = rows[j].iter().map(|x| x / nj).collect();
        for (i, xi) in rows.iter().enumerate() {
            if i == j {
                continue;
            }
            let lhs = match variant {
                BallVariant::Angle => {
                    let ni = norm(xi);
                    let ui: Vec<f64> = xi.iter().map(|x| x / ni).collect();
                    dot(&ui, &uj)
                }
                _ => dot(xi, &uj),
            };
            ok &= lhs < r;
        }
    }
    ok
}

/// Cube-product experiment with coordinate means 1/2 and the query's
/// variances (uniform coordinates when all variances are 1/12).
pub fn cube_experiment(
    q: &CubeBoundQuery,
    variant: CubeVariant,
    cfg: &ExperimentConfig,
) -> Result<SeparationReport> {
    cube_experiment_with_means(q, &vec![0.5; q.dim()], variant, cfg)
}

pub fn cube_experiment_with_means(
    q: &CubeBoundQuery,
    means: &[f64],
    variant: CubeVariant,
    cfg: &ExperimentConfig,
) -> Result<SeparationReport> {
    let spec = DistributionSpec::UnitCubeProduct {
        means: means.to_vec(),
        variances: q.variances.clone(),
    };
    let sampler = PointSampler::new(&spec)?;
    let dim = q.dim();
    let m = q.sample_size as usize;
    let r0_sq = q.r0_squared();
    let delta = q.delta;
    let all = variant == CubeVariant::All;
    let tally = run_trials(cfg, |i, rng| {
        let pts = draw(&sampler, rng, m);
        let success = cube_event(&pts, dim, means, r0_sq, delta, all);
        Ok(with_spot_check(i, success, || {
            naive_cube_event(&pts, dim, means, r0_sq, delta, all)
        }))
    })?;
    let (event, bound) = if all {
        (
            "cube: every centred point separated from the rest",
            bounds::cube_all_bound(q),
        )
    } else {
        (
            "cube: last centred point separated from the rest",
            bounds::cube_single_bound(q),
        )
    };
    let params = json!({
        "n": dim, "M": q.sample_size, "delta": delta, "r0_squared": r0_sq,
        "variant": if all { "all" } else { "single" }, "seed": cfg.master_seed,
    });
    let mut report =
        SeparationReport::build(event, params, cfg.trials, tally.successes, bound.value);
    attach_spot_checks(&mut report, &tally);
    Ok(report)
}

fn naive_cube_event(
    points: &[f64],
    dim: usize,
    center: &[f64],
    r0_squared: f64,
    delta: f64,
    all: bool,
) -> bool {
    let r0 = r0_squared.sqrt();
    let rows: Vec<Vec<f64>> = points
        .chunks_exact(dim)
        .map(|x| x.iter().zip(center).map(|(a, c)| a - c).collect())
        .collect();
    let m = rows.len();
    let mut ok = true;
    for x in &rows {
        let ratio = dot(x, x) / r0_squared;
        ok &= (1.0 - delta..=1.0 + delta).contains(&ratio);
    }
    for j in 0..m {
        if !all && j != m - 1 {
            continue;
        }
        let uj: Vec<f64> = rows[j].iter().map(|v| v / norm(&rows[j])).collect();
        for (i, xi) in rows.iter().enumerate() {
            if i != j {
                let scaled: Vec<f64> = xi.iter().map(|v| v / r0).collect();
                ok &= dot(&scaled, &uj) < (1.0 - delta).sqrt();
            }
        }
    }
    ok
}

/// Explicit-functional test of m-tuple separation.
///
/// Per trial: `M` ball points form `X`; `m` more ball points are resampled
/// until they satisfy the correlation condition and form `Y`. The functional
/// `(x, ȳ/‖ȳ‖)` with threshold `r(ε*)` at the bound's maximiser `ε*` must put
/// all of `Y` at or above `r` and all of `X` strictly below it. This tests
/// one particular separating functional, so its frequency lower-bounds the
/// probability that some separating functional exists.
pub fn tuple_experiment(q: &TupleBoundQuery, cfg: &ExperimentConfig) -> Result<SeparationReport> {
    let bound = bounds::tuple_bound(q)?;
    let eps = bound.term("eps").expect("tuple bound reports eps");
    let threshold = q.threshold(eps)?;
    let dim = q.dim as usize;
    let m = q.tuple_size as usize;
    let big_m = q.sample_size as usize;
    let sampler = PointSampler::new(&DistributionSpec::unit_ball(dim))?;
    let tally = run_trials(cfg, |i, rng| {
        let xs = draw(&sampler, rng, big_m);
        let mut ys = vec![0.0; m * dim];
        let mut attempts = 0;
        loop {
            if attempts == TUPLE_MAX_ATTEMPTS {
                return Err(Error::ResampleExhausted { attempts });
            }
            attempts += 1;
            sampler.fill(rng, &mut ys);
            if correlation_condition(&ys, dim, q.beta1, q.beta2) {
                break;
            }
        }
        let success = tuple_separated(&xs, &ys, dim, threshold);
        let mut o = with_spot_check(i, success, || {
            // Exhaustive check over all M + m points with an explicit mean.
            let ybar: Vec<f64> = (0..dim)
                .map(|k| ys.chunks_exact(dim).map(|y| y[k]).sum::<f64>() / m as f64)
                .collect();
            let l = norm(&ybar);
            let score = |p: &[f64]| p.iter().zip(&ybar).map(|(a, b)| a * b / l).sum::<f64>();
            let mut ok = true;
            for y in ys.chunks_exact(dim) {
                ok &= score(y) >= threshold;
            }
            for x in xs.chunks_exact(dim) {
                ok &= score(x) < threshold;
            }
            ok
        });
        o.count = attempts as u64;
        Ok(o)
    })?;
    let params = json!({
        "n": q.dim, "M": q.sample_size, "m": q.tuple_size,
        "beta1": q.beta1, "beta2": q.beta2, "seed": cfg.master_seed,
    });
    let mut report = SeparationReport::build(
        "m-tuple separated from the sample by the explicit functional",
        params,
        cfg.trials,
        tally.successes,
        bound.value,
    );
    let mut maximizer = BTreeMap::new();
    maximizer.insert("eps".to_string(), eps);
    maximizer.insert("delta".to_string(), bound.term("delta").unwrap_or(f64::NAN));
    maximizer.insert("threshold".to_string(), threshold);
    report.maximizer_detail = Some(maximizer);
    report.set(
        "mean_resample_attempts",
        tally.count as f64 / cfg.trials as f64,
    );
    report.note = Some("constructive variant: tests the explicit functional only".into());
    attach_spot_checks(&mut report, &tally);
    Ok(report)
}

/// Separation of a single point by a Fisher discriminant.
///
/// Per trial: `M` ball points; the last is the "error". Its direction is
/// `fisher_direction(Cov(rest), 0, x_M, mean(rest))` with the default ridge,
/// the threshold is `c = (w, x_M)`, and the trial succeeds iff every other
/// point scores strictly below `c`. Degenerate directions count as failures.
/// The reference bound is the single-point ball bound maximised over `r`.
pub fn fisher_separability_experiment(
    dim: usize,
    sample_size: usize,
    cfg: &ExperimentConfig,
) -> Result<SeparationReport> {
    if sample_size < 3 {
        return Err(Error::param("Fisher experiment needs at least 3 points"));
    }
    let sampler = PointSampler::new(&DistributionSpec::unit_ball(dim))?;
    let tally = run_trials(cfg, |i, rng| {
        let pts = draw(&sampler, rng, sample_size);
        let rows: Vec<&[f64]> = pts.chunks_exact(dim).collect();
        let (err, rest) = rows.split_last().expect("non-empty");
        let (mean_rest, cov_rest) = numerics::mean_and_covariance(rest.iter().copied(), dim)?;
        let ridge = cov_rest.default_ridge();
        let err_vec = DVector::from_column_slice(err);
        let w = match numerics::fisher_direction(
            &cov_rest,
            &SymmetricMatrix::zeros(dim),
            &err_vec,
            &mean_rest,
            ridge,
        ) {
            Ok(w) => w,
            Err(Error::DegenerateDirection) | Err(Error::Singular { .. }) => {
                return Ok(Outcome {
                    flagged: true,
                    spot_checked: spot_check(i),
                    ..Outcome::default()
                })
            }
            Err(e) => return Err(e),
        };
        let c = dot(w.as_slice(), err);
        let success = rest.iter().all(|x| dot(w.as_slice(), x) < c);
        Ok(with_spot_check(i, success, || {
            let over = rest.iter().filter(|x| dot(w.as_slice(), x) >= c).count();
            over == 0 && dot(w.as_slice(), err) == c
        }))
    })?;
    let (bound, best_r) = best_single_ball_bound(dim as u64, sample_size as u64);
    let params = json!({"n": dim, "M": sample_size, "seed": cfg.master_seed});
    let mut report = SeparationReport::build(
        "Fisher discriminant separates the last point from the rest",
        params,
        cfg.trials,
        tally.successes,
        bound,
    );
    report.set("degenerate_trials", tally.flagged as f64);
    report.set("reference_r", best_r);
    attach_spot_checks(&mut report, &tally);
    Ok(report)
}

/// `max_r ball_single_bound(n, M, r)` over `r = k/1000`.
pub fn best_single_ball_bound(dim: u64, sample_size: u64) -> (f64, f64) {
    (1..1000)
        .map(|k| {
            let r = k as f64 / 1000.0;
            let q = BallBoundQuery::new(dim, sample_size, r).expect("valid query");
            (bounds::ball_single_bound(&q).value, r)
        })
        .fold(
            (0.0, 0.5),
            |best, cur| if cur.0 > best.0 { cur } else { best },
        )
}

/// Draws one sample through the same stream a trial would use; handy for
/// inspecting individual trials.
pub fn trial_sample(
    spec: &DistributionSpec,
    count: usize,
    master_seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let sampler = PointSampler::new(spec)?;
    let mut rng = rng::stream(master_seed, trial);
    Ok(draw(&sampler, &mut rng, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rule() {
        let i = stats::wilson99(95, 100);
        assert_eq!(
            verdict(0.95, &i, 0.95 + i.halfwidth() - 1e-12),
            Verdict::Pass
        );
        assert_eq!(
            verdict(0.95, &i, 0.95 + i.halfwidth() + 1e-9),
            Verdict::Fail
        );
    }

    #[test]
    fn orthogonality_trivial_eps() {
        let cfg = ExperimentConfig::new(50, 1);
        let r = orthogonality_experiment(10, 2, 2.0, &cfg).unwrap();
        assert_eq!(r.frequency, 1.0);
        assert!(orthogonality_experiment(10, 1, 0.1, &cfg).is_err());
    }

    #[test]
    fn orthogonality_fails_in_low_dimension() {
        let cfg = ExperimentConfig::new(100, 2);
        let r = orthogonality_experiment(2, 50, 0.01, &cfg).unwrap();
        assert!(r.frequency <= 0.01);
        assert!(r.passed());
    }

    #[test]
    fn ball_single_point_sample() {
        // M = 1: event is just ‖x‖ > r, probability 1 − r^n.
        let q = BallBoundQuery::new(3, 1, 0.8).unwrap();
        let r = ball_experiment(&q, BallVariant::Single, &ExperimentConfig::new(4000, 3)).unwrap();
        let p = 1.0 - 0.8f64.powi(3);
        assert!((r.frequency - p).abs() < 3.0 * r.halfwidth());
    }

    #[test]
    fn predicates_on_hand_points() {
        let pts = [0.9, 0.0, 0.0, 0.95];
        assert!(last_point_separated(&pts, 2, 0.5));
        assert!(all_points_separated(&pts, 2, 0.5));
        assert!(all_angles_separated(&pts, 2, 0.5));
        let pts = [0.9, 0.1, 0.8, 0.2];
        assert!(!all_angles_separated(&pts, 2, 0.5));
        assert!(!last_point_separated(&[0.1, 0.2], 2, 0.5));
        // X far below the cap, Y above it.
        assert!(tuple_separated(&[0.0, 0.1], &[1.0, 0.0, 0.9, 0.1], 2, 0.5));
        assert!(!tuple_separated(
            &[0.95, 0.0],
            &[1.0, 0.0, 0.9, 0.1],
            2,
            0.5
        ));
    }

    #[test]
    fn correlation_sums_by_hand() {
        let ys = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert_eq!(correlation_sums(&ys, 2), vec![1.0, 1.0, 2.0]);
        assert!(correlation_condition(&ys, 2, 1.0, 0.5));
        assert!(!correlation_condition(&ys, 2, 0.9, 0.5));
    }

    #[test]
    fn jobs_do_not_change_reports() {
        let q = BallBoundQuery::new(20, 30, 0.8).unwrap();
        let a = ball_experiment(
            &q,
            BallVariant::All,
            &ExperimentConfig::new(64, 9).with_jobs(1),
        )
        .unwrap();
        let b = ball_experiment(
            &q,
            BallVariant::All,
            &ExperimentConfig::new(64, 9).with_jobs(4),
        )
        .unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn spot_checks_agree() {
        let q = BallBoundQuery::new(5, 8, 0.6).unwrap();
        for v in [BallVariant::Single, BallVariant::All, BallVariant::Angle] {
            let r = ball_experiment(&q, v, &ExperimentConfig::new(500, 4)).unwrap();
            assert_eq!(r.detail["spot_checks"], 5.0);
            assert_eq!(r.detail["spot_check_failures"], 0.0);
        }
    }

    #[test]
    fn cube_near_upper_delta_is_well_formed() {
        let q = CubeBoundQuery::uniform(10, 5, 2.0 / 3.0 - 1e-9).unwrap();
        let r = cube_experiment(&q, CubeVariant::All, &ExperimentConfig::new(20, 1)).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn tuple_m1_uses_squared_threshold() {
        let q = TupleBoundQuery::new(30, 20, 1, 0.0, 0.0).unwrap();
        let r = tuple_experiment(&q, &ExperimentConfig::new(50, 5)).unwrap();
        let d = r.maximizer_detail.unwrap();
        assert!((d["threshold"] - (1.0 - d["eps"]).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn tuple_resample_exhaustion() {
        // Two ball points essentially never have inner-product sum >= 0.99.
        let q = TupleBoundQuery::new(50, 5, 2, 1.0, 0.99).unwrap();
        let r = tuple_experiment(&q, &ExperimentConfig::new(1, 5));
        assert!(matches!(
            r,
            Err(Error::ResampleExhausted {
                attempts: TUPLE_MAX_ATTEMPTS
            })
        ));
    }

    #[test]
    fn fisher_low_dimension_is_well_formed() {
        let r = fisher_separability_experiment(1, 3, &ExperimentConfig::new(200, 1)).unwrap();
        assert!(r.frequency < 0.9);
        assert!(r.passed());
        assert!(fisher_separability_experiment(5, 2, &ExperimentConfig::new(1, 1)).is_err());
    }

    #[test]
    fn single_trial_report() {
        let q = BallBoundQuery::new(10, 3, 0.9).unwrap();
        let r = ball_experiment(&q, BallVariant::Single, &ExperimentConfig::new(1, 0)).unwrap();
        assert!(r.wilson99[1] - r.wilson99[0] > 0.8);
        assert!(ExperimentConfig::new(0, 0).validate().is_err());
    }
}
