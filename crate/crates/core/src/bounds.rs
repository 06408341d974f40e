//! Closed-form probability lower bounds and cardinality caps.
//!
//! Every probability bound is clamped to `[0, 1]`. Power terms such as `r^n`
//! and `ρ^n` underflow long before the regimes of interest end, so each
//! formula has a log-space route; [`EvalPath::Auto`] switches to it when a
//! power term's log magnitude exceeds [`LOG_SWITCH`]. Cardinality caps are
//! returned as reals; floor them yourself.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::{Error, Result};

/// Log magnitude above which [`EvalPath::Auto`] evaluates in log space.
pub const LOG_SWITCH: f64 = 700.0;

// Above this, ln(1 + √(1+x)) is taken as ln(1 + √x).
const SQRT_ASYMPTOTE_LOG: f64 = 600.0;

/// Number of admissible grid points scanned by [`tuple_bound`].
pub const TUPLE_GRID_POINTS: usize = 1024;

/// Final bracket width of the golden-section refinement in [`tuple_bound`].
pub const TUPLE_REFINE_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalPath {
    #[default]
    Auto,
    Direct,
    LogSpace,
}

impl EvalPath {
    fn use_log(self, logs: &[f64]) -> bool {
        match self {
            EvalPath::Direct => false,
            EvalPath::LogSpace => true,
            EvalPath::Auto => logs.iter().any(|l| l.abs() > LOG_SWITCH),
        }
    }
}

/// A bound value together with the intermediate terms it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    /// `log10(value)`, reported for caps whose value may overflow `f64`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log10_value: Option<f64>,
    pub detail: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, bool>,
    pub log_space: bool,
}

impl BoundResult {
    fn probability(raw: f64, log_space: bool) -> Self {
        let mut detail = BTreeMap::new();
        detail.insert("raw".to_string(), raw);
        BoundResult {
            value: raw.clamp(0.0, 1.0),
            log10_value: None,
            detail,
            flags: BTreeMap::new(),
            log_space,
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.detail.insert(key.to_string(), v);
        self
    }

    fn flag(mut self, key: &str, v: bool) -> Self {
        self.flags.insert(key.to_string(), v);
        self
    }

    pub fn term(&self, key: &str) -> Option<f64> {
        self.detail.get(key).copied()
    }
}

/// `x^n` either as `powf` or as `exp(n·ln x)`, with `n·ln x` precomputed.
fn power(base: f64, exponent: f64, log_value: f64, log_space: bool) -> f64 {
    if log_space {
        log_value.exp()
    } else {
        base.powf(exponent)
    }
}

/// `c · x` where `ln x` is known; `c ≥ 0`.
fn scaled(c: f64, x: f64, log_x: f64, log_space: bool) -> f64 {
    if c == 0.0 {
        0.0
    } else if log_space {
        (c.ln() + log_x).exp()
    } else {
        c * x
    }
}

fn check_dim(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("dimension n must be at least 1"));
    }
    Ok(())
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::param(format!("{name} = {v} must lie in (0, 1)")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Waist concentration on the sphere
// ---------------------------------------------------------------------------

/// `P(|(x, y)| < ε) ≥ 1 − 2·exp(−n·ε²/2)` for independent uniform unit vectors.
pub fn pairwise_orthogonality_bound(n: u64, eps: f64) -> Result<BoundResult> {
    check_dim(n)?;
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps = {eps} must be positive")));
    }
    let tail = 2.0 * (-0.5 * n as f64 * eps * eps).exp();
    Ok(BoundResult::probability(1.0 - tail, false).with("two_tail", tail))
}

/// Largest `N` for which `N` random unit vectors are pairwise `ε`-orthogonal
/// with probability above `1 − ϑ`: `e^{ε²n/4}·√(ln(1/(1−ϑ)))`.
pub fn quasiorthogonal_set_size(n: u64, eps: f64, theta: f64) -> Result<BoundResult> {
    check_dim(n)?;
    check_unit_open("eps", eps)?;
    check_unit_open("theta", theta)?;
    let exponent = eps * eps * n as f64 / 4.0;
    let log_term = -(-theta).ln_1p(); // ln(1/(1−ϑ))
    let log_value = exponent + 0.5 * log_term.ln();
    Ok(BoundResult {
        value: log_value.exp(),
        log10_value: Some(log_value / std::f64::consts::LN_10),
        detail: BTreeMap::new(),
        flags: BTreeMap::new(),
        log_space: true,
    }
    .with("exponent", exponent)
    .with("log_inv_confidence", log_term)
    .with("ln_value", log_value))
}

/// Inverse of [`quasiorthogonal_set_size`] in `ϑ`: the confidence `1 − ϑ`
/// guaranteed for a set of `count` vectors, `exp(−N²·e^{−ε²n/2})`.
pub fn quasiorthogonal_confidence(n: u64, eps: f64, count: u64) -> f64 {
    let log_n2 = 2.0 * (count as f64).ln();
    (-(log_n2 - eps * eps * n as f64 / 2.0).exp()).exp()
}

// ---------------------------------------------------------------------------
// Equidistribution in the unit ball
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallBoundQuery {
    pub dim: u64,
    pub sample_size: u64,
    pub r: f64,
}

impl BallBoundQuery {
    pub fn new(dim: u64, sample_size: u64, r: f64) -> Result<Self> {
        check_dim(dim)?;
        if sample_size == 0 {
            return Err(Error::param("sample size M must be at least 1"));
        }
        check_unit_open("r", r)?;
        Ok(BallBoundQuery {
            dim,
            sample_size,
            r,
        })
    }

    /// `ρ = √(1 − r²)`.
    pub fn rho(&self) -> f64 {
        (1.0 - self.r * self.r).sqrt()
    }

    /// `ln ρ`, computed without forming `1 − r²` explicitly.
    fn ln_rho(&self) -> f64 {
        0.5 * (-self.r * self.r).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BallForm {
    Single,
    All,
    Angle,
}

fn ball_bound(q: &BallBoundQuery, form: BallForm, path: EvalPath) -> BoundResult {
    let n = q.dim as f64;
    let m = q.sample_size as f64;
    let log_rn = n * q.r.ln();
    let log_rhon = n * q.ln_rho();
    let log_space = path.use_log(&[log_rn, log_rhon]);
    let rn = power(q.r, n, log_rn, log_space);
    let rhon = power(q.rho(), n, log_rhon, log_space);
    let (norm_coef, cap_coef) = match form {
        BallForm::Single => (1.0, 0.5 * (m - 1.0)),
        BallForm::All => (m, 0.5 * m * (m - 1.0)),
        BallForm::Angle => (m, m * (m - 1.0)),
    };
    let term_norm = scaled(norm_coef, rn, log_rn, log_space);
    let term_cap = scaled(cap_coef, rhon, log_rhon, log_space);
    BoundResult::probability(1.0 - term_norm - term_cap, log_space)
        .with("r_pow_n", rn)
        .with("rho_pow_n", rhon)
        .with("rho", q.rho())
        .with("term_norm", term_norm)
        .with("term_cap", term_cap)
}

/// Lower bound on `P(‖x_M‖ > r and (x_i, x_M/‖x_M‖) < r for all i ≠ M)`:
/// `1 − r^n − 0.5(M−1)ρ^n`.
pub fn ball_single_bound(q: &BallBoundQuery) -> BoundResult {
    ball_single_bound_with(q, EvalPath::Auto)
}

pub fn ball_single_bound_with(q: &BallBoundQuery, path: EvalPath) -> BoundResult {
    ball_bound(q, BallForm::Single, path)
}

/// Every point separated from every other: `1 − M·r^n − 0.5·M(M−1)ρ^n`.
pub fn ball_all_bound(q: &BallBoundQuery) -> BoundResult {
    ball_all_bound_with(q, EvalPath::Auto)
}

pub fn ball_all_bound_with(q: &BallBoundQuery, path: EvalPath) -> BoundResult {
    ball_bound(q, BallForm::All, path)
}

/// Pairwise angle version: `1 − M·r^n − M(M−1)ρ^n`.
pub fn ball_angle_bound(q: &BallBoundQuery) -> BoundResult {
    ball_angle_bound_with(q, EvalPath::Auto)
}

pub fn ball_angle_bound_with(q: &BallBoundQuery, path: EvalPath) -> BoundResult {
    ball_bound(q, BallForm::Angle, path)
}

/// Sample size cap for single-point separability at confidence `1 − ϑ`:
/// `M < 2(ϑ − r^n)/ρ^n`, or 0 when `ϑ ≤ r^n`.
pub fn max_cardinality_single(dim: u64, r: f64, theta: f64) -> Result<BoundResult> {
    max_cardinality_single_with(dim, r, theta, EvalPath::Auto)
}

pub fn max_cardinality_single_with(
    dim: u64,
    r: f64,
    theta: f64,
    path: EvalPath,
) -> Result<BoundResult> {
    let q = BallBoundQuery::new(dim, 1, r)?;
    check_unit_open("theta", theta)?;
    let n = dim as f64;
    let log_rn = n * r.ln();
    let log_rhon = n * q.ln_rho();
    let log_space = path.use_log(&[log_rn, log_rhon]);
    let rn = power(r, n, log_rn, log_space);
    let rhon = power(q.rho(), n, log_rhon, log_space);
    let slack = theta - rn;
    let base = BoundResult {
        value: 0.0,
        log10_value: None,
        detail: BTreeMap::new(),
        flags: BTreeMap::new(),
        log_space,
    }
    .with("r_pow_n", rn)
    .with("rho_pow_n", rhon);
    if slack <= 0.0 {
        return Ok(base.flag("theta_below_r_pow_n", true));
    }
    let (value, ln_value) = if log_space {
        let ln_value = std::f64::consts::LN_2 + slack.ln() - log_rhon;
        (ln_value.exp(), ln_value)
    } else {
        let v = 2.0 * slack / rhon;
        (v, v.ln())
    };
    Ok(BoundResult {
        value,
        log10_value: Some(ln_value / std::f64::consts::LN_10),
        ..base
    }
    .flag("theta_below_r_pow_n", false))
}

/// Sample size cap for full separability at confidence `1 − ϑ`:
/// `M < (r/ρ)^n (−1 + √(1 + 2ϑρ^n/r^{2n}))`.
///
/// `−1 + √(1+x)` is evaluated as `x / (1 + √(1+x))`. When `1 + x` rounds to 1
/// the cap equals its asymptote `ϑ/r^n` to working precision; the flag
/// `sqrt_arg_underflow` reports that case.
pub fn max_cardinality_all(dim: u64, r: f64, theta: f64) -> Result<BoundResult> {
    max_cardinality_all_with(dim, r, theta, EvalPath::Auto)
}

pub fn max_cardinality_all_with(
    dim: u64,
    r: f64,
    theta: f64,
    path: EvalPath,
) -> Result<BoundResult> {
    let q = BallBoundQuery::new(dim, 1, r)?;
    check_unit_open("theta", theta)?;
    let n = dim as f64;
    let log_r = r.ln();
    let log_rho = q.ln_rho();
    // x = 2ϑρ^n / r^{2n}
    let log_x = (2.0 * theta).ln() + n * log_rho - 2.0 * n * log_r;
    let log_ratio = n * (log_r - log_rho);
    let log_space = path.use_log(&[n * log_r, n * log_rho, 2.0 * n * log_r, log_x, log_ratio]);
    let underflow = log_x < f64::EPSILON.ln() - std::f64::consts::LN_2;
    let (value, ln_value, x) = if log_space {
        // ln(1 + √(1+x)), stable for x far from 1 in either direction.
        let ln_denominator = if log_x > SQRT_ASYMPTOTE_LOG {
            0.5 * log_x + (-0.5 * log_x).exp().ln_1p()
        } else {
            let x = log_x.exp();
            (1.0 + x).sqrt().ln_1p()
        };
        let ln_value = log_ratio + log_x - ln_denominator;
        (ln_value.exp(), ln_value, log_x.exp())
    } else {
        let rn = r.powf(n);
        let rhon = q.rho().powf(n);
        let x = 2.0 * theta * rhon / (rn * rn);
        let v = (r / q.rho()).powf(n) * (x / (1.0 + (1.0 + x).sqrt()));
        (v, v.ln(), x)
    };
    Ok(BoundResult {
        value,
        log10_value: Some(ln_value / std::f64::consts::LN_10),
        detail: BTreeMap::new(),
        flags: BTreeMap::new(),
        log_space,
    }
    .with("sqrt_arg", x)
    .with("asymptote", (theta.ln() - n * log_r).exp())
    .flag("sqrt_arg_underflow", underflow))
}

// ---------------------------------------------------------------------------
// Product distributions in the unit cube
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeBoundQuery {
    pub sample_size: u64,
    pub delta: f64,
    pub variances: Vec<f64>,
}

impl CubeBoundQuery {
    pub fn new(sample_size: u64, delta: f64, variances: Vec<f64>) -> Result<Self> {
        check_dim(variances.len() as u64)?;
        if sample_size == 0 {
            return Err(Error::param("sample size M must be at least 1"));
        }
        if !(delta > 0.0 && delta < 2.0 / 3.0) {
            return Err(Error::param(format!(
                "delta = {delta} must lie in (0, 2/3)"
            )));
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::param(format!(
                "coordinate variance {v} must be positive"
            )));
        }
        Ok(CubeBoundQuery {
            sample_size,
            delta,
            variances,
        })
    }

    /// All coordinates `U(0, 1)`, so `σ_i² = 1/12`.
    pub fn uniform(dim: usize, sample_size: u64, delta: f64) -> Result<Self> {
        Self::new(sample_size, delta, vec![1.0 / 12.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    /// `R₀² = Σ σ_i²`, with compensated summation.
    pub fn r0_squared(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &v in &self.variances {
            let t = sum + v;
            comp += if sum.abs() >= v.abs() {
                (sum - t) + v
            } else {
                (v - t) + sum
            };
            sum = t;
        }
        sum + comp
    }

    /// The two exponents `2δ²R₀⁴/n` and `2R₀⁴(2−3δ)²/n`.
    pub fn exponents(&self) -> (f64, f64) {
        let n = self.dim() as f64;
        let r4 = self.r0_squared().powi(2);
        let d = self.delta;
        (2.0 * d * d * r4 / n, 2.0 * r4 * (2.0 - 3.0 * d).powi(2) / n)
    }
}

fn cube_bound(q: &CubeBoundQuery, all: bool, path: EvalPath) -> BoundResult {
    let m = q.sample_size as f64;
    let (a, b) = q.exponents();
    let log_space = path.use_log(&[a, b]);
    let exp_a = (-a).exp();
    let exp_b = (-b).exp();
    let cap_coef = if all { m * (m - 1.0) } else { m - 1.0 };
    let term_norm = scaled(2.0 * m, exp_a, -a, log_space);
    let term_cap = scaled(cap_coef, exp_b, -b, log_space);
    BoundResult::probability(1.0 - term_norm - term_cap, log_space)
        .with("exponent_norm", a)
        .with("exponent_cap", b)
        .with("exp_norm", exp_a)
        .with("exp_cap", exp_b)
        .with("term_norm", term_norm)
        .with("term_cap", term_cap)
        .with("r0_squared", q.r0_squared())
}

/// `1 − 2M·exp(−2δ²R₀⁴/n) − (M−1)·exp(−2R₀⁴(2−3δ)²/n)`.
pub fn cube_single_bound(q: &CubeBoundQuery) -> BoundResult {
    cube_bound(q, false, EvalPath::Auto)
}

pub fn cube_single_bound_with(q: &CubeBoundQuery, path: EvalPath) -> BoundResult {
    cube_bound(q, false, path)
}

/// `1 − 2M·exp(−2δ²R₀⁴/n) − M(M−1)·exp(−2R₀⁴(2−3δ)²/n)`.
pub fn cube_all_bound(q: &CubeBoundQuery) -> BoundResult {
    cube_bound(q, true, EvalPath::Auto)
}

pub fn cube_all_bound_with(q: &CubeBoundQuery, path: EvalPath) -> BoundResult {
    cube_bound(q, true, path)
}

// ---------------------------------------------------------------------------
// Separation of m-tuples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TupleBoundQuery {
    pub dim: u64,
    pub sample_size: u64,
    pub tuple_size: u64,
    pub beta1: f64,
    pub beta2: f64,
}

impl TupleBoundQuery {
    pub fn new(
        dim: u64,
        sample_size: u64,
        tuple_size: u64,
        beta1: f64,
        beta2: f64,
    ) -> Result<Self> {
        check_dim(dim)?;
        if tuple_size == 0 {
            return Err(Error::param("tuple size m must be at least 1"));
        }
        if !(beta1 >= beta2) {
            return Err(Error::param(format!(
                "beta1 = {beta1} must be at least beta2 = {beta2}"
            )));
        }
        let q = TupleBoundQuery {
            dim,
            sample_size,
            tuple_size,
            beta1,
            beta2,
        };
        if !(1.0 + (tuple_size as f64 - 1.0) * beta1 > 0.0) {
            return Err(Error::param("side condition 1 + (m-1)·beta1 > 0 violated"));
        }
        if q.eps_upper() <= 0.0 {
            return Err(Error::param(
                "no eps in (0,1) satisfies (1-eps)^2 + beta2·(m-1) > 0",
            ));
        }
        Ok(q)
    }

    /// Supremum of the admissible `ε` range.
    pub fn eps_upper(&self) -> f64 {
        let s = self.beta2 * (self.tuple_size as f64 - 1.0);
        if s >= 0.0 {
            1.0
        } else {
            1.0 - (-s).sqrt()
        }
    }

    pub fn delta(&self, eps: f64) -> Result<f64> {
        tuple_delta(eps, self.tuple_size, self.beta1, self.beta2)
    }

    /// Threshold of the explicit separating functional at `ε`.
    pub fn threshold(&self, eps: f64) -> Result<f64> {
        tuple_threshold(eps, self.tuple_size, self.beta1, self.beta2)
    }

    /// `ln[(1−(1−ε)^n)^m (1 − Δ^{n/2}/2)^M]` with `Δ` clamped at 0.
    pub fn log_objective(&self, eps: f64) -> f64 {
        let n = self.dim as f64;
        let delta = self.delta(eps).unwrap_or(f64::NAN).max(0.0);
        let norm_ok = -(n * (-eps).ln_1p()).exp_m1();
        let cap = (0.5 * n * delta.ln()).exp();
        self.tuple_size as f64 * norm_ok.ln() + self.sample_size as f64 * (-0.5 * cap).ln_1p()
    }

    /// The objective evaluated with plain powers.
    pub fn direct_objective(&self, eps: f64) -> f64 {
        let n = self.dim as f64;
        let delta = self.delta(eps).unwrap_or(f64::NAN).max(0.0);
        (1.0 - (1.0 - eps).powf(n)).powf(self.tuple_size as f64)
            * (1.0 - delta.powf(n / 2.0) / 2.0).powf(self.sample_size as f64)
    }
}

fn tuple_numerator(eps: f64, m: u64, beta1: f64, beta2: f64) -> Result<(f64, f64)> {
    let m1 = m as f64 - 1.0;
    let num = (1.0 - eps).powi(2) + beta2 * m1;
    let den = 1.0 + m1 * beta1;
    if !(num > 0.0) {
        return Err(Error::param(format!(
            "side condition (1-eps)^2 + beta2·(m-1) > 0 violated at eps = {eps}"
        )));
    }
    if !(den > 0.0) {
        return Err(Error::param("side condition 1 + (m-1)·beta1 > 0 violated"));
    }
    Ok((num, den))
}

/// `Δ(ε, m) = 1 − (1/m)·(((1−ε)² + β₂(m−1)) / √(1 + (m−1)β₁))²`.
pub fn tuple_delta(eps: f64, m: u64, beta1: f64, beta2: f64) -> Result<f64> {
    let (num, den) = tuple_numerator(eps, m, beta1, beta2)?;
    Ok(1.0 - num * num / (den * m as f64))
}

/// `r = (1/√m)·((1−ε)² + β₂(m−1)) / √(1 + (m−1)β₁)`, so that `Δ = 1 − r²`.
pub fn tuple_threshold(eps: f64, m: u64, beta1: f64, beta2: f64) -> Result<f64> {
    let (num, den) = tuple_numerator(eps, m, beta1, beta2)?;
    Ok(num / (den.sqrt() * (m as f64).sqrt()))
}

/// `max_{ε∈(0,1)} (1−(1−ε)^n)^m (1 − Δ(ε,m)^{n/2}/2)^M`.
///
/// Scans [`TUPLE_GRID_POINTS`] evenly spaced admissible `ε`, then runs a
/// golden-section search on the bracket around the best grid point down to
/// [`TUPLE_REFINE_WIDTH`]. `detail` carries the maximising `eps`, `delta`
/// and the functional's `threshold` there.
pub fn tuple_bound(q: &TupleBoundQuery) -> Result<BoundResult> {
    let upper = q.eps_upper();
    let step = upper / (TUPLE_GRID_POINTS + 1) as f64;
    let objective = |e: f64| {
        let v = q.log_objective(e);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut best_k = 1;
    let mut best = f64::NEG_INFINITY;
    for k in 1..=TUPLE_GRID_POINTS {
        let v = objective(k as f64 * step);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let grid_best = best;
    let mut best_eps = best_k as f64 * step;

    let (mut a, mut b) = ((best_k - 1) as f64 * step, (best_k + 1) as f64 * step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > TUPLE_REFINE_WIDTH {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    for (e, v) in [(c, fc), (d, fd)] {
        if v > best {
            best = v;
            best_eps = e;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::param(
            "tuple objective is not finite at any admissible eps",
        ));
    }
    let value = best.exp();
    Ok(BoundResult::probability(value, true)
        .with("eps", best_eps)
        .with("delta", q.delta(best_eps)?)
        .with("threshold", q.threshold(best_eps)?)
        .with("grid_value", grid_best.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn pairwise_values() {
        let v = pairwise_orthogonality_bound(2000, 0.1).unwrap().value;
        assert!(rel(v, 1.0 - 2.0 * (-10.0f64).exp()) < 1e-15);
        assert!((v - 0.999909).abs() < 1e-6);
        assert_eq!(pairwise_orthogonality_bound(1, 0.01).unwrap().value, 0.0);
        let mut prev = 0.0;
        for n in (1..5000).step_by(37) {
            let v = pairwise_orthogonality_bound(n, 0.05).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn quasiorthogonal_values() {
        let r = quasiorthogonal_set_size(2000, 0.1, 0.01).unwrap();
        assert!((r.value - 14.878621539089872).abs() < 1e-12);
        // eps^2 n / 4 = 1 and theta = 1 - 1/e
        let r = quasiorthogonal_set_size(400, 0.1, 1.0 - (-1.0f64).exp()).unwrap();
        assert!(rel(r.value, std::f64::consts::E) < 1e-13);
        let r = quasiorthogonal_set_size(1_000_000, 0.1, 0.5).unwrap();
        let expected = 2500.0 / std::f64::consts::LN_10 + 0.5 * std::f64::consts::LN_2.log10();
        assert!((r.log10_value.unwrap() - expected).abs() < 1e-9);
        assert!(r.value.is_infinite());
        assert!(quasiorthogonal_set_size(10, 0.1, 1.0).is_err());
        assert!(quasiorthogonal_set_size(10, 0.1, 0.0).is_err());
    }

    #[test]
    fn confidence_inverts_size() {
        let cap = quasiorthogonal_set_size(3000, 0.12, 0.05).unwrap().value;
        let conf = quasiorthogonal_confidence(3000, 0.12, 1);
        assert!(conf > 0.95);
        let at_cap = (-(cap * cap) * (-(0.12f64 * 0.12 * 3000.0) / 2.0).exp()).exp();
        assert!((at_cap - 0.95).abs() < 1e-12);
    }

    #[test]
    fn ball_values() {
        let q = BallBoundQuery::new(2, 1, 0.5).unwrap();
        assert_eq!(ball_single_bound(&q).value, 0.75);
        assert_eq!(ball_all_bound(&q).value, 0.75);
        assert_eq!(ball_angle_bound(&q).value, 0.75);

        let q = BallBoundQuery::new(50, 100, 0.9).unwrap();
        assert!((ball_single_bound(&q).value - 0.99484622479267984).abs() < 1e-12);

        let q = BallBoundQuery::new(2, 1_000_000, 0.9).unwrap();
        assert_eq!(ball_single_bound(&q).value, 0.0);

        let q = BallBoundQuery::new(100, 1000, 0.9).unwrap();
        assert!((ball_all_bound(&q).value - 0.97343860111241252).abs() < 1e-12);
    }

    #[test]
    fn ball_ordering_and_detail() {
        for &(n, m, r) in &[(10, 5, 0.7), (50, 100, 0.9), (200, 3, 0.5), (3, 2, 0.99)] {
            let q = BallBoundQuery::new(n, m, r).unwrap();
            let s = ball_single_bound(&q);
            let a = ball_all_bound(&q);
            let g = ball_angle_bound(&q);
            assert!(s.value >= a.value && a.value >= g.value);
            let recombined = 1.0 - s.term("term_norm").unwrap() - s.term("term_cap").unwrap();
            assert!(
                (recombined - s.term("raw").unwrap()).abs() <= 1e-12 * recombined.abs().max(1.0)
            );
        }
    }

    #[test]
    fn cardinality_caps() {
        let s = max_cardinality_single(100, 0.9, 0.01).unwrap();
        assert!(rel(s.value, 2.3024746980178961e34) < 1e-6);
        let a = max_cardinality_all(100, 0.9, 0.01).unwrap();
        assert!(rel(a.value, 376.48619495968299) < 1e-6);
        assert!(a.flags["sqrt_arg_underflow"]);
        let z = max_cardinality_single(10, 0.9, 0.01).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.flags["theta_below_r_pow_n"]);
    }

    #[test]
    fn cube_values() {
        let q = CubeBoundQuery::uniform(5000, 100, 0.5).unwrap();
        let (a, b) = q.exponents();
        assert!(rel(a, 0.25 * 5000.0 / 72.0) < 1e-14);
        assert!(rel(b, 5000.0 * 0.25 / 72.0) < 1e-14);
        let v = cube_single_bound(&q).value;
        assert!(rel(1.0 - v, 299.0 * (-5000.0f64 / 288.0).exp()) < 1e-6);
        let q = CubeBoundQuery::uniform(100, 100, 0.5).unwrap();
        assert_eq!(cube_single_bound(&q).value, 0.0);
        assert!(CubeBoundQuery::uniform(10, 10, 2.0 / 3.0).is_err());
        assert!(CubeBoundQuery::uniform(10, 10, 0.0).is_err());
        let edge = CubeBoundQuery::uniform(10, 10, 2.0 / 3.0 - 1e-12).unwrap();
        let r = cube_all_bound(&edge);
        assert!(r.term("exponent_cap").unwrap() < 1e-20);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn tuple_delta_values() {
        assert_eq!(tuple_delta(0.0, 1, 0.0, 0.0).unwrap(), 0.0);
        let d = tuple_delta(0.1, 2, 0.5, 0.5).unwrap();
        assert!((d - (1.0 - 0.5 * 1.31f64.powi(2) / 1.5)).abs() < 1e-15);
        assert!((d - 0.42797).abs() < 1e-5);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..100 {
            let d = tuple_delta(k as f64 / 100.0, 3, 0.6, 0.2).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        assert!(tuple_delta(0.5, 3, 0.0, -1.0).is_err());
        assert!(tuple_delta(0.5, 3, -1.0, -1.0).is_err());
    }

    #[test]
    fn tuple_m1_reduces() {
        let q = TupleBoundQuery::new(60, 40, 1, 0.0, 0.0).unwrap();
        for k in 1..20 {
            let e = k as f64 / 20.0;
            let delta = 1.0 - (1.0 - e).powi(4);
            let expected = (1.0 - (1.0 - e).powi(60)) * (1.0 - delta.powi(30) / 2.0).powi(40);
            assert!(rel(q.direct_objective(e), expected) < 1e-12);
        }
    }

    #[test]
    fn tuple_maximality() {
        let q = TupleBoundQuery::new(100, 1000, 2, 0.5, 0.5).unwrap();
        let r = tuple_bound(&q).unwrap();
        let eps = r.term("eps").unwrap();
        let mut state = 12345u64;
        for _ in 0..100 {
            state = crate::rng::derive_seed(state, 1);
            let e = (state >> 11) as f64 / (1u64 << 53) as f64;
            if e > 0.0 {
                assert!(r.value >= q.log_objective(e).exp());
            }
        }
        assert!(r.value >= r.term("grid_value").unwrap());
        assert!((r.value - q.log_objective(eps).exp()).abs() < 1e-15);
    }

    #[test]
    fn tuple_rejects_inadmissible() {
        assert!(TupleBoundQuery::new(10, 10, 3, 0.0, -1.0).is_err());
        assert!(TupleBoundQuery::new(10, 10, 3, 0.1, 0.5).is_err());
        let q = TupleBoundQuery::new(10, 10, 3, 0.0, -0.2).unwrap();
        assert!((q.eps_upper() - (1.0 - 0.4f64.sqrt())).abs() < 1e-15);
        assert!(tuple_bound(&q).is_ok());
    }
}
