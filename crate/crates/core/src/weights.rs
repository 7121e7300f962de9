//! The truncated sieve weight
//!
//! ```text
//! λ(n) = Σ_{d | (P(n), 𝒫)} μ(d) g(d),   g(y) = (ln(D/y))^{k0+l0} / (k0+l0)!  for y < D
//! ```
//!
//! where 𝒫 is the product of primes up to D1. 𝒫 is never formed; `d | 𝒫`
//! means `d` squarefree with every prime factor at most D1.

use std::io::{self, Write};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::Pow;
use rayon::prelude::*;
use serde::Serialize;

use crate::admissible::AdmissibleTuple;
use crate::arith::small_primes;
use crate::error::{Error, Result};
use crate::interval::IntervalSpec;
use crate::logreal::{log_factorial, serialize_ratio};
use crate::summation::CompensatedSum;

/// Largest number of distinct primes `p <= D1` allowed to divide one `P(n)`.
pub const MAX_SMOOTH_FACTORS: usize = 64;

/// Execution knobs shared by the batch evaluators. None of them change results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalConfig {
    pub parallel: bool,
    /// Integers per work chunk; also the block size of ordered reductions.
    pub chunk_size: usize,
    /// Largest interval length a batch may materialize.
    pub max_batch_len: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            parallel: true,
            chunk_size: 1 << 14,
            max_batch_len: 1 << 25,
        }
    }
}

impl EvalConfig {
    pub fn sequential() -> Self {
        Self {
            parallel: false,
            ..Self::default()
        }
    }
}

/// Sieve parameters: `k0`, `l0`, `varpi`, `x` and the levels `D`, `D1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveParams {
    pub k0: usize,
    pub l0: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub varpi: Ratio<u64>,
    pub x: u64,
    /// ⌊x^{varpi + 1/4}⌋ unless overridden.
    pub d: u64,
    /// ⌊x^{varpi}⌋ unless overridden.
    pub d1: u64,
}

impl SieveParams {
    /// Derives `D` and `D1` exactly from `x` and `varpi`.
    pub fn new(k0: usize, l0: usize, varpi: Ratio<u64>, x: u64) -> Result<Self> {
        if k0 == 0 || l0 == 0 {
            return Err(Error::invalid("k0 and l0 must be at least 1"));
        }
        if x == 0 {
            return Err(Error::invalid("x must be positive"));
        }
        if *varpi.numer() == 0 || varpi > Ratio::new(1, 4) {
            return Err(Error::invalid(format!(
                "varpi = {}/{} must lie in (0, 1/4]",
                varpi.numer(),
                varpi.denom()
            )));
        }
        let d = floor_rational_power(x, varpi + Ratio::new(1, 4))?;
        let d1 = floor_rational_power(x, varpi)?;
        Ok(Self {
            k0,
            l0,
            varpi,
            x,
            d,
            d1,
        })
    }

    /// k0 = 3.5e6, l0 = 180, varpi = 1/1168 at the given `x`.
    pub fn paper(x: u64) -> Result<Self> {
        Self::new(3_500_000, 180, Ratio::new(1, 1168), x)
    }

    /// Replaces the derived levels with explicit `D` and `D1`.
    pub fn with_levels(mut self, d: u64, d1: u64) -> Result<Self> {
        if d == 0 || d1 == 0 {
            return Err(Error::invalid("D and D1 must be positive"));
        }
        if d1 > d {
            return Err(Error::invalid(format!("D1 = {d1} exceeds D = {d}")));
        }
        self.d = d;
        self.d1 = d1;
        Ok(self)
    }

    /// `k0 + l0`, the power in `g`.
    pub fn degree(&self) -> usize {
        self.k0 + self.l0
    }

    pub fn ln_d(&self) -> f64 {
        (self.d as f64).ln()
    }

    /// `D^2`, saturating.
    pub fn d_squared(&self) -> u64 {
        self.d.saturating_mul(self.d)
    }
}

/// Largest integer `y` with `y <= x^e`, checked in exact integer arithmetic.
pub fn floor_rational_power(x: u64, e: Ratio<u64>) -> Result<u64> {
    let (num, den) = (*e.numer(), *e.denom());
    if num == 0 {
        return Ok(1);
    }
    if x <= 1 {
        return Ok(x);
    }
    let bits = (64 - x.leading_zeros()) as u64;
    if bits.saturating_mul(num) > 1 << 24 {
        return Err(Error::Resource {
            cap: "rational_power_bits",
            requested: bits.saturating_mul(num),
            limit: 1 << 24,
        });
    }
    let target: BigUint = Pow::pow(BigUint::from(x), num);
    let fits = |y: u64| -> bool { Pow::pow(BigUint::from(y), den) <= target };
    let estimate = (x as f64).powf(num as f64 / den as f64);
    if !(estimate.is_finite() && estimate < u64::MAX as f64) {
        return Err(Error::invalid("x^e exceeds u64"));
    }
    let mut y = estimate.floor() as u64;
    while y > 0 && !fits(y) {
        y -= 1;
    }
    while fits(y + 1) {
        y += 1;
    }
    Ok(y)
}

/// Precomputed `g` for fixed `D` and degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightG {
    d: u64,
    degree: usize,
    ln_norm: f64,
}

impl WeightG {
    pub fn new(params: &SieveParams) -> Self {
        Self {
            d: params.d,
            degree: params.degree(),
            ln_norm: log_factorial(params.degree() as u64),
        }
    }

    /// `g(y)`; exactly zero for `y >= D`. Requires `y >= 1`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 1.0 {
            return Err(Error::invalid(format!("g(y) requires y >= 1, got {y}")));
        }
        if y >= self.d as f64 {
            return Ok(0.0);
        }
        Ok(self.eval_log(((self.d as f64 - y) / y).ln_1p()))
    }

    /// `g(d)` at an integer argument; no range check beyond the support.
    #[inline]
    pub fn at(&self, d: u64) -> f64 {
        if d >= self.d {
            return 0.0;
        }
        // D - d is exact, so ln(D/d) keeps full relative precision near the edge.
        self.eval_log(((self.d - d) as f64 / d as f64).ln_1p())
    }

    #[inline]
    fn eval_log(&self, log_ratio: f64) -> f64 {
        (self.degree as f64 * log_ratio.ln() - self.ln_norm).exp()
    }
}

pub fn weight_g(y: f64, params: &SieveParams) -> Result<f64> {
    WeightG::new(params).eval(y)
}

/// Context for repeated λ evaluations with one tuple and parameter set.
#[derive(Debug, Clone)]
pub struct LambdaSieve<'a> {
    tuple: &'a AdmissibleTuple,
    params: &'a SieveParams,
    g: WeightG,
    /// Primes up to D1, ascending.
    primes: Vec<u64>,
    /// For each prime, the residues `r` with `p | P(n)` iff `n ≡ r (mod p)`.
    roots: Vec<Vec<u64>>,
}

impl<'a> LambdaSieve<'a> {
    pub fn new(tuple: &'a AdmissibleTuple, params: &'a SieveParams) -> Result<Self> {
        if tuple.k() != params.k0 {
            return Err(Error::invalid(format!(
                "tuple has {} offsets but k0 = {}",
                tuple.k(),
                params.k0
            )));
        }
        let primes = small_primes(params.d1);
        let roots = primes
            .iter()
            .map(|&p| {
                let mut r: Vec<u64> = tuple.offsets().iter().map(|&h| (p - h % p) % p).collect();
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();
        Ok(Self {
            tuple,
            params,
            g: WeightG::new(params),
            primes,
            roots,
        })
    }

    pub fn params(&self) -> &SieveParams {
        self.params
    }

    pub fn tuple(&self) -> &AdmissibleTuple {
        self.tuple
    }

    pub fn g(&self) -> &WeightG {
        &self.g
    }

    /// Primes `p <= D1` dividing `P(n)`.
    pub fn smooth_primes(&self, n: u64) -> Vec<u64> {
        self.primes
            .iter()
            .zip(&self.roots)
            .filter(|(&p, roots)| roots.binary_search(&(n % p)).is_ok())
            .map(|(&p, _)| p)
            .collect()
    }

    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("lambda requires n >= 1"));
        }
        self.lambda_from_primes(&self.smooth_primes(n))
    }

    /// `Σ μ(d) g(d)` over squarefree products `d < D` of the given ascending primes.
    pub fn lambda_from_primes(&self, primes: &[u64]) -> Result<f64> {
        if primes.len() > MAX_SMOOTH_FACTORS {
            return Err(Error::Resource {
                cap: "smooth_prime_factors",
                requested: primes.len() as u64,
                limit: MAX_SMOOTH_FACTORS as u64,
            });
        }
        let mut acc = CompensatedSum::new();
        acc.add(self.g.at(1));
        self.accumulate(primes, 1, -1.0, &mut acc);
        Ok(acc.value())
    }

    fn accumulate(&self, primes: &[u64], d: u64, sign: f64, acc: &mut CompensatedSum) {
        for (i, &p) in primes.iter().enumerate() {
            let next = match d.checked_mul(p) {
                Some(v) if v < self.g.d => v,
                // Ascending primes: every later product is at least as large.
                _ => break,
            };
            acc.add(sign * self.g.at(next));
            self.accumulate(&primes[i + 1..], next, -sign, acc);
        }
    }

    /// λ over `[lo, lo + len)` by marking root classes of each small prime.
    fn chunk(&self, lo: u64, len: usize) -> Result<Vec<f64>> {
        let mut divisors: Vec<Vec<u64>> = vec![Vec::new(); len];
        for (&p, roots) in self.primes.iter().zip(&self.roots) {
            let base = lo % p;
            for &r in roots {
                let mut idx = ((r + p - base) % p) as usize;
                while idx < len {
                    divisors[idx].push(p);
                    idx += p as usize;
                }
            }
        }
        divisors
            .iter()
            .map(|ps| self.lambda_from_primes(ps))
            .collect()
    }

    /// Table of λ(n) for every n in the interval.
    pub fn batch(&self, interval: &IntervalSpec, config: &EvalConfig) -> Result<WeightTable> {
        let len = interval.len();
        if len > config.max_batch_len {
            return Err(Error::Resource {
                cap: "max_batch_len",
                requested: len,
                limit: config.max_batch_len,
            });
        }
        let chunk = config.chunk_size.max(1) as u64;
        let n_chunks = len.div_ceil(chunk);
        let run = |c: u64| {
            let start = interval.lo() + c * chunk;
            let size = chunk.min(interval.hi() - start + 1) as usize;
            self.chunk(start, size)
        };
        let parts: Vec<Vec<f64>> = if config.parallel {
            (0..n_chunks)
                .into_par_iter()
                .map(run)
                .collect::<Result<_>>()?
        } else {
            (0..n_chunks).map(run).collect::<Result<_>>()?
        };
        let values = parts.concat();
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(WeightTable {
            interval: *interval,
            values,
            max_abs,
        })
    }
}

pub fn lambda_weight(n: u64, tuple: &AdmissibleTuple, params: &SieveParams) -> Result<f64> {
    LambdaSieve::new(tuple, params)?.lambda(n)
}

pub fn lambda_batch(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    config: &EvalConfig,
) -> Result<WeightTable> {
    LambdaSieve::new(tuple, params)?.batch(interval, config)
}

/// λ(n) for every n of an interval; `values[i]` belongs to `interval.lo() + i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    pub interval: IntervalSpec,
    pub values: Vec<f64>,
    pub max_abs: f64,
}

impl WeightTable {
    pub fn get(&self, n: u64) -> Option<f64> {
        if self.interval.contains(n) {
            Some(self.values[(n - self.interval.lo()) as usize])
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.interval.iter().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with header `n,lambda`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,lambda")?;
        for (n, v) in self.iter() {
            writeln!(out, "{n},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Comparison of max |λ| with the envelope `x^ε (ln D)^{k0+l0} / (k0+l0)!`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupReport {
    pub max_abs: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Diagnostic only: the divisor-bound envelope has no explicit constant.
pub fn lambda_sup_report(
    table: &WeightTable,
    params: &SieveParams,
    epsilon: f64,
) -> Result<SupReport> {
    if table.is_empty() {
        return Err(Error::invalid("empty weight table"));
    }
    let ln_d = params.ln_d();
    let bound = if ln_d <= 0.0 {
        0.0
    } else {
        (epsilon * (table.interval.x as f64).ln() + params.degree() as f64 * ln_d.ln()
            - log_factorial(params.degree() as u64))
        .exp()
    };
    Ok(SupReport {
        max_abs: table.max_abs,
        bound,
        ok: table.max_abs <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tuple(offsets: &[u64]) -> AdmissibleTuple {
        AdmissibleTuple::new(offsets.to_vec()).unwrap()
    }

    fn desk(k0: usize, l0: usize, d: u64, d1: u64) -> SieveParams {
        SieveParams::new(k0, l0, Ratio::new(1, 4), 10_000)
            .unwrap()
            .with_levels(d, d1)
            .unwrap()
    }

    fn direct_g(d: u64, big_d: u64, degree: usize) -> f64 {
        if d >= big_d {
            return 0.0;
        }
        let fact: f64 = (1..=degree).map(|k| k as f64).product();
        ((big_d as f64) / (d as f64)).ln().powi(degree as i32) / fact
    }

    fn trial_mobius(mut n: u64) -> f64 {
        let mut sign = 1.0;
        let mut p = 2;
        while p * p <= n {
            if n.is_multiple_of(p) {
                n /= p;
                if n.is_multiple_of(p) {
                    return 0.0;
                }
                sign = -sign;
            }
            p += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }

    /// Sum over every d < D dividing both P(n) and the primorial of D1.
    fn brute_lambda(n: u64, offsets: &[u64], params: &SieveParams) -> f64 {
        let p_n = offsets
            .iter()
            .fold(BigUint::one(), |acc, &h| acc * BigUint::from(n + h));
        let primorial = (2..=params.d1)
            .filter(|&q| (2..q).all(|r| q % r != 0))
            .fold(BigUint::one(), |acc, q| acc * q);
        let mut acc = CompensatedSum::new();
        for d in 1..params.d {
            let bd = BigUint::from(d);
            if (&primorial % &bd).is_zero() && (&p_n % &bd).is_zero() {
                acc.add(trial_mobius(d) * direct_g(d, params.d, params.degree()));
            }
        }
        acc.value()
    }

    #[test]
    fn derived_levels_are_exact_floors() {
        let p = SieveParams::new(3, 1, Ratio::new(1, 4), 1_000_000).unwrap();
        assert_eq!((p.d, p.d1), (1000, 31));
        let p = SieveParams::new(3, 1, Ratio::new(1, 8), 1 << 24).unwrap();
        assert_eq!((p.d, p.d1), (1 << 9, 8));
        assert_eq!(
            floor_rational_power(999_999, Ratio::new(1, 2)).unwrap(),
            999
        );
        assert_eq!(
            floor_rational_power(1_000_000, Ratio::new(1, 2)).unwrap(),
            1000
        );
        let paper = SieveParams::paper(1_000_000_000).unwrap();
        assert_eq!(paper.d1, 1);
        assert!(paper.d1 <= paper.d);
        assert!(SieveParams::new(3, 1, Ratio::new(1, 3), 100).is_err());
        assert!(SieveParams::new(0, 1, Ratio::new(1, 8), 100).is_err());
        assert!(desk(2, 1, 10, 3).with_levels(3, 10).is_err());
    }

    #[test]
    fn g_examples() {
        let p = desk(2, 1, 10, 3);
        assert_eq!(weight_g(10.0, &p).unwrap(), 0.0);
        let g1 = weight_g(1.0, &p).unwrap();
        assert!((g1 - 10f64.ln().powi(3) / 6.0).abs() < 1e-14);
        assert!((g1 - 2.0347).abs() < 1e-4);
        assert!(weight_g(9.0, &p).unwrap() > 0.0);
        assert!(weight_g(0.5, &p).is_err());
        let ys = [1.0, 1.5, 2.0, 5.0, 9.99];
        for w in ys.windows(2) {
            assert!(weight_g(w[0], &p).unwrap() > weight_g(w[1], &p).unwrap());
        }
    }

    #[test]
    fn g_log_space_matches_direct_formula() {
        for degree in 2..=16usize {
            let p = desk(degree - 1, 1, 100_000, 10);
            let g = WeightG::new(&p);
            for d in [1u64, 2, 17, 999, 90_000] {
                let direct = direct_g(d, 100_000, degree);
                assert!(
                    (g.at(d) - direct).abs() <= 1e-12 * direct,
                    "degree {degree}, d {d}"
                );
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 1, 10, 3);
        let lambda = lambda_weight(3, &t, &p).unwrap();
        let expected = direct_g(1, 10, 3) - direct_g(3, 10, 3);
        assert!((lambda - expected).abs() < 1e-14);
        assert!((lambda - 1.7438).abs() < 1e-4);

        let empty = desk(2, 1, 10, 1);
        let g1 = weight_g(1.0, &empty).unwrap();
        for n in 1..50 {
            assert_eq!(lambda_weight(n, &t, &empty).unwrap(), g1);
        }
        // P(n) coprime to 2 * 3 * 5 * 7: n = 5 gives 5 * 7, not coprime; n = 11 gives 11 * 13.
        let q = desk(2, 1, 1000, 7);
        assert_eq!(
            lambda_weight(11, &t, &q).unwrap(),
            weight_g(1.0, &q).unwrap()
        );
        assert!(lambda_weight(0, &t, &q).is_err());
        assert!(lambda_weight(5, &tuple(&[0, 2, 6]), &q).is_err());
    }

    #[test]
    fn batch_matches_single_and_brute_force() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 1, 100, 10);
        let iv = IntervalSpec::explicit(10, 10).unwrap();
        let table = lambda_batch(&iv, &t, &p, &EvalConfig::default()).unwrap();
        assert_eq!(table.len(), 11);
        for (n, v) in table.iter() {
            assert_eq!(v, lambda_weight(n, &t, &p).unwrap());
            let oracle = brute_lambda(n, t.offsets(), &p);
            assert!(
                (v - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
                "n = {n}"
            );
        }
        let single = IntervalSpec::explicit(17, 0).unwrap();
        let one = lambda_batch(&single, &t, &p, &EvalConfig::default()).unwrap();
        assert_eq!(one.values, vec![lambda_weight(17, &t, &p).unwrap()]);
    }

    #[test]
    fn batch_random_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = tuple(&[0, 4, 6, 10, 12, 16]);
        let p = desk(6, 2, 400, 23);
        let iv = IntervalSpec::explicit(1_000_000, 20_000).unwrap();
        let table = lambda_batch(&iv, &t, &p, &EvalConfig::default()).unwrap();
        for _ in 0..200 {
            let n = rng.gen_range(iv.lo()..=iv.hi());
            let oracle = brute_lambda(n, t.offsets(), &p);
            let v = table.get(n).unwrap();
            assert!(
                (v - oracle).abs() <= 1e-9 * oracle.abs(),
                "n = {n}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn batch_independent_of_chunking_and_threads() {
        let t = tuple(&[0, 2, 6]);
        let p = desk(3, 1, 500, 30);
        let iv = IntervalSpec::explicit(50_000, 9_999).unwrap();
        let reference = lambda_batch(&iv, &t, &p, &EvalConfig::sequential()).unwrap();
        for chunk_size in [1, 13, 4096, 1 << 20] {
            let cfg = EvalConfig {
                chunk_size,
                ..EvalConfig::default()
            };
            assert_eq!(lambda_batch(&iv, &t, &p, &cfg).unwrap(), reference);
        }
    }

    #[test]
    fn resource_cap_is_loud() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 1, 100, 10);
        let iv = IntervalSpec::explicit(10, 1000).unwrap();
        let cfg = EvalConfig {
            max_batch_len: 100,
            ..EvalConfig::default()
        };
        assert!(matches!(
            lambda_batch(&iv, &t, &p, &cfg),
            Err(Error::Resource {
                cap: "max_batch_len",
                ..
            })
        ));
    }

    #[test]
    fn smooth_factor_cap() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 1, 100, 10);
        let sieve = LambdaSieve::new(&t, &p).unwrap();
        let many: Vec<u64> = crate::arith::small_primes(1000)
            .into_iter()
            .take(65)
            .collect();
        assert!(matches!(
            sieve.lambda_from_primes(&many),
            Err(Error::Resource {
                cap: "smooth_prime_factors",
                ..
            })
        ));
    }

    #[test]
    fn sup_report_and_csv() {
        let t = tuple(&[0, 2]);
        let flat = desk(2, 1, 10, 1);
        let iv = IntervalSpec::explicit(100, 5).unwrap();
        let table = lambda_batch(&iv, &t, &flat, &EvalConfig::default()).unwrap();
        let report = lambda_sup_report(&table, &flat, 0.5).unwrap();
        assert_eq!(report.max_abs, weight_g(1.0, &flat).unwrap());
        assert!(report.ok);

        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,lambda"));
        let first = lines.next().unwrap();
        let (n, v) = first.split_once(',').unwrap();
        assert_eq!(n, "100");
        assert_eq!(v.parse::<f64>().unwrap(), table.values[0]);
        assert_eq!(text.lines().count(), 7);
    }
}
