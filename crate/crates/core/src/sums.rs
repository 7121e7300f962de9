//! Short-interval sums S1 = Σ λ(n)² and S2 = Σ λ(n)² Σ_i θ(n + h_i), the
//! statistic S2 − ln(3x)·S1, its asymptotic main-term predictions, and the
//! prime-pair counts those sums control.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::admissible::AdmissibleTuple;
use crate::arith::{sieve_primes, PrimeTable};
use crate::error::{Error, Result};
use crate::interval::IntervalSpec;
use crate::logreal::{
    default_kappa1, default_kappa2, log_binomial, log_factorial, omega_constant, LogReal,
    OmegaParams,
};
use crate::summation::CompensatedSum;
use crate::weights::{EvalConfig, LambdaSieve, SieveParams, WeightTable};

/// Truncation point of the singular series used in predictions.
pub const DEFAULT_SINGULAR_SERIES_PMAX: u64 = 1_000_000;

/// Which length multiplies the S1 prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum S1Length {
    /// Δ(x), consistent with the short-interval statement of the lemma.
    #[default]
    Delta,
    /// The bare `x` as printed in the S1 upper bound.
    StrictPaperX,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionOptions {
    pub kappa1: LogReal,
    pub kappa2: LogReal,
    pub s1_length: S1Length,
    pub singular_series_pmax: u64,
}

impl Default for PredictionOptions {
    fn default() -> Self {
        Self {
            kappa1: default_kappa1(),
            kappa2: default_kappa2(),
            s1_length: S1Length::Delta,
            singular_series_pmax: DEFAULT_SINGULAR_SERIES_PMAX,
        }
    }
}

/// Main-term predictions, all as log-space reals. `o(1)` terms are dropped,
/// so these are asymptotic references rather than certified bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPredictions {
    /// (1+κ1)/(k0+2l0)! · C(2l0,l0) · 𝔖 · L · (ln D)^{k0+2l0}
    pub s1_bound: LogReal,
    /// k0(1−κ2)/(k0+2l0+1)! · C(2l0+2,l0+1) · 𝔖 · Δ · (ln D)^{k0+2l0+1}
    pub s2_bound: LogReal,
    pub omega: LogReal,
    /// ω · 𝔖 · Δ · (ln D)^{k0+2l0+1}
    pub omega_prediction: LogReal,
}

/// Inputs to [`bound_predictions`]; decoupled from any concrete tuple so the
/// predictions can be evaluated at parameter sizes where no sum is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInputs {
    pub k0: u64,
    pub l0: u64,
    pub varpi: Ratio<u64>,
    pub ln_d: f64,
    pub x: u64,
    pub delta: u64,
    pub ln_singular_series: f64,
}

pub fn bound_predictions(
    input: &PredictionInputs,
    opts: &PredictionOptions,
) -> Result<BoundPredictions> {
    if input.ln_d.is_nan() || input.ln_d <= 0.0 {
        return Err(Error::invalid("predictions need D > 1"));
    }
    let (k0, l0) = (input.k0, input.l0);
    let ln_ln_d = input.ln_d.ln();
    // Stays finite for delta = 0; those predictions are zeroed below.
    let ln_delta = (input.delta.max(1) as f64).ln();
    let s1_len = match opts.s1_length {
        S1Length::Delta => ln_delta,
        S1Length::StrictPaperX => (input.x as f64).ln(),
    };
    let one = LogReal::ONE;
    let common = input.ln_singular_series;

    let s1_scale = LogReal::from_ln(
        log_binomial(2 * l0, l0)? - log_factorial(k0 + 2 * l0)
            + common
            + s1_len
            + (k0 + 2 * l0) as f64 * ln_ln_d,
    );
    let s1_bound = (one + opts.kappa1) * s1_scale;

    let s2_scale = LogReal::from_ln(
        (k0 as f64).ln() + log_binomial(2 * l0 + 2, l0 + 1)? - log_factorial(k0 + 2 * l0 + 1)
            + common
            + ln_delta
            + (k0 + 2 * l0 + 1) as f64 * ln_ln_d,
    );
    let s2_bound = (one - opts.kappa2) * s2_scale;

    let omega = omega_constant(&OmegaParams {
        k0,
        l0,
        varpi: input.varpi,
        kappa1: opts.kappa1,
        kappa2: opts.kappa2,
    })?;
    if input.delta == 0 {
        // A single-point interval has no main term.
        return Ok(BoundPredictions {
            s1_bound: if opts.s1_length == S1Length::Delta {
                LogReal::ZERO
            } else {
                s1_bound
            },
            s2_bound: LogReal::ZERO,
            omega,
            omega_prediction: LogReal::ZERO,
        });
    }
    let omega_prediction =
        omega * LogReal::from_ln(common + ln_delta + (k0 + 2 * l0 + 1) as f64 * ln_ln_d);
    Ok(BoundPredictions {
        s1_bound,
        s2_bound,
        omega,
        omega_prediction,
    })
}

/// Measured sums with their predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumReport {
    pub s1: f64,
    pub s2: f64,
    /// `s2 − ln(3x)·s1`, with `x` the left endpoint.
    pub statistic: f64,
    pub ln_3x: f64,
    pub singular_series: f64,
    pub predictions: BoundPredictions,
    pub interval: IntervalSpec,
    pub params: SieveParams,
    pub tuple: AdmissibleTuple,
}

impl SumReport {
    /// JSON object with keys `s1`, `s2`, `statistic`, `s1_bound_log`,
    /// `s2_bound_log`, `omega_prediction_log` and a `params` echo. `_log`
    /// values are natural logs of the magnitude; the signs are reported
    /// alongside.
    pub fn to_json(&self) -> Value {
        let mut v = predictions_json(&self.predictions);
        let obj = v.as_object_mut().expect("object");
        obj.insert("s1".into(), json!(self.s1));
        obj.insert("s2".into(), json!(self.s2));
        obj.insert("statistic".into(), json!(self.statistic));
        obj.insert("ln_3x".into(), json!(self.ln_3x));
        obj.insert("singular_series".into(), json!(self.singular_series));
        obj.insert(
            "params".into(),
            json!({
                "k0": self.params.k0,
                "l0": self.params.l0,
                "varpi": format!("{}/{}", self.params.varpi.numer(), self.params.varpi.denom()),
                "x": self.params.x,
                "D": self.params.d,
                "D1": self.params.d1,
                "interval": { "lo": self.interval.lo(), "hi": self.interval.hi(), "delta": self.interval.delta() },
                "tuple": self.tuple.offsets(),
            }),
        );
        v
    }
}

fn log_field(x: &LogReal) -> Value {
    if x.is_zero() {
        Value::Null
    } else {
        json!(x.ln_abs())
    }
}

/// Prediction fields shared by [`SumReport::to_json`] and prediction-only output.
pub fn predictions_json(p: &BoundPredictions) -> Value {
    json!({
        "s1_bound_log": log_field(&p.s1_bound),
        "s2_bound_log": log_field(&p.s2_bound),
        "omega_prediction_log": log_field(&p.omega_prediction),
        "omega_prediction_sign": p.omega_prediction.sign() as i8,
        "omega_log": log_field(&p.omega),
        "omega_sign": p.omega.sign() as i8,
    })
}

/// Primes covering `[lo, hi + h_k]` as a bitmap indexed from `lo`.
struct PrimeWindow {
    lo: u64,
    is_prime: Vec<bool>,
}

impl PrimeWindow {
    fn new(lo: u64, hi: u64) -> Result<Self> {
        let table = sieve_primes(lo, hi)?;
        let mut is_prime = vec![false; (hi - lo + 1) as usize];
        for &p in table.iter() {
            is_prime[(p - lo) as usize] = true;
        }
        Ok(Self { lo, is_prime })
    }

    #[inline]
    fn theta(&self, n: u64) -> f64 {
        if self.is_prime[(n - self.lo) as usize] {
            (n as f64).ln()
        } else {
            0.0
        }
    }

    #[inline]
    fn contains(&self, n: u64) -> bool {
        self.is_prime[(n - self.lo) as usize]
    }
}

fn check_window(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    config: &EvalConfig,
) -> Result<u64> {
    let top = interval
        .hi()
        .checked_add(tuple.width())
        .ok_or_else(|| Error::invalid("interval plus tuple width overflows u64"))?;
    let len = top - interval.lo() + 1;
    if len > config.max_batch_len {
        return Err(Error::Resource {
            cap: "max_batch_len",
            requested: len,
            limit: config.max_batch_len,
        });
    }
    Ok(top)
}

/// Ordered, chunked compensated reduction of `f(i)` over `0..len`.
fn ordered_sum<F>(len: usize, config: &EvalConfig, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunk = config.chunk_size.max(1);
    let n_chunks = len.div_ceil(chunk);
    let block = |c: usize| -> CompensatedSum {
        let start = c * chunk;
        (start..(start + chunk).min(len)).map(&f).collect()
    };
    let partials: Vec<CompensatedSum> = if config.parallel {
        (0..n_chunks).into_par_iter().map(block).collect()
    } else {
        (0..n_chunks).map(block).collect()
    };
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// S1 and S2 from a single weight table.
fn sums_from_table(
    table: &WeightTable,
    tuple: &AdmissibleTuple,
    config: &EvalConfig,
) -> Result<(f64, f64)> {
    let interval = table.interval;
    let top = check_window(&interval, tuple, config)?;
    let window = PrimeWindow::new(interval.lo(), top)?;
    let lo = interval.lo();
    let s1 = ordered_sum(table.len(), config, |i| table.values[i] * table.values[i]);
    let s2 = ordered_sum(table.len(), config, |i| {
        let n = lo + i as u64;
        let theta_sum: f64 = tuple.offsets().iter().map(|&h| window.theta(n + h)).sum();
        table.values[i] * table.values[i] * theta_sum
    });
    Ok((s1, s2))
}

pub fn s1_with(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    config: &EvalConfig,
) -> Result<f64> {
    let table = LambdaSieve::new(tuple, params)?.batch(interval, config)?;
    Ok(ordered_sum(table.len(), config, |i| {
        table.values[i] * table.values[i]
    }))
}

/// `Σ_{x <= n <= x+Δ} λ(n)²`.
pub fn s1(interval: &IntervalSpec, tuple: &AdmissibleTuple, params: &SieveParams) -> Result<f64> {
    s1_with(interval, tuple, params, &EvalConfig::default())
}

pub fn s2_with(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    config: &EvalConfig,
) -> Result<f64> {
    let table = LambdaSieve::new(tuple, params)?.batch(interval, config)?;
    Ok(sums_from_table(&table, tuple, config)?.1)
}

/// `Σ_{x <= n <= x+Δ} λ(n)² Σ_i θ(n + h_i)`.
pub fn s2(interval: &IntervalSpec, tuple: &AdmissibleTuple, params: &SieveParams) -> Result<f64> {
    s2_with(interval, tuple, params, &EvalConfig::default())
}

pub fn lemma3_statistic_with(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    opts: &PredictionOptions,
    config: &EvalConfig,
) -> Result<SumReport> {
    let table = LambdaSieve::new(tuple, params)?.batch(interval, config)?;
    let (s1, s2) = sums_from_table(&table, tuple, config)?;
    let ln_3x = (3.0 * interval.x as f64).ln();
    let series = tuple.singular_series(opts.singular_series_pmax.max(tuple.k() as u64))?;
    let predictions = bound_predictions(
        &PredictionInputs {
            k0: params.k0 as u64,
            l0: params.l0 as u64,
            varpi: params.varpi,
            ln_d: params.ln_d(),
            x: interval.x,
            delta: interval.delta(),
            ln_singular_series: series.ln_value,
        },
        opts,
    )?;
    Ok(SumReport {
        s1,
        s2,
        statistic: s2 - ln_3x * s1,
        ln_3x,
        singular_series: series.value,
        predictions,
        interval: *interval,
        params: params.clone(),
        tuple: tuple.clone(),
    })
}

/// S1, S2, the statistic `S2 − ln(3x) S1` and the main-term predictions.
pub fn lemma3_statistic(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
) -> Result<SumReport> {
    lemma3_statistic_with(
        interval,
        tuple,
        params,
        &PredictionOptions::default(),
        &EvalConfig::default(),
    )
}

/// Unordered pairs of primes `p1 < p2` in the interval with
/// `1 < p2 − p1 < gap_bound`.
pub fn count_weak_prime_pairs(interval: &IntervalSpec, gap_bound: u64) -> Result<u64> {
    if gap_bound < 2 {
        return Err(Error::invalid("gap bound must be at least 2"));
    }
    let primes = sieve_primes(interval.lo(), interval.hi())?;
    Ok(count_pairs_in(&primes, gap_bound))
}

fn count_pairs_in(primes: &PrimeTable, gap_bound: u64) -> u64 {
    let ps = primes.as_slice();
    let mut left = 0;
    let mut count = 0u64;
    for (j, &p) in ps.iter().enumerate() {
        while p - ps[left] >= gap_bound {
            left += 1;
        }
        count += (j - left) as u64;
        // (2, 3) is the only pair at distance 1.
        if p == 3 && left == 0 && ps[0] == 2 {
            count -= 1;
        }
    }
    count
}

/// Number of `n` in the interval for which at least two of `n + h_i` are prime.
pub fn count_two_prime_translates(interval: &IntervalSpec, tuple: &AdmissibleTuple) -> Result<u64> {
    let top = interval
        .hi()
        .checked_add(tuple.width())
        .ok_or_else(|| Error::invalid("interval plus tuple width overflows u64"))?;
    let window = PrimeWindow::new(interval.lo(), top)?;
    Ok(interval
        .iter()
        .filter(|&n| {
            tuple
                .offsets()
                .iter()
                .filter(|&&h| window.contains(n + h))
                .take(2)
                .count()
                >= 2
        })
        .count() as u64)
}
