//! Prime sieving, factorization and the multiplicative functions used by the
//! weight and discrepancy computations.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::admissible::{residue_coverage, AdmissibleTuple};
use crate::error::{Error, Result};

/// Default number of integers covered by one sieve segment.
pub const DEFAULT_SEGMENT_SIZE: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    pub segment_size: usize,
    /// Sieve disjoint segments on the rayon pool.
    pub parallel: bool,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_size: DEFAULT_SEGMENT_SIZE,
            parallel: true,
        }
    }
}

/// All primes in the closed range `[range_lo, range_hi]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeTable {
    pub range_lo: u64,
    pub range_hi: u64,
    pub primes: Vec<u64>,
}

impl PrimeTable {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u64> {
        self.primes.iter()
    }

    /// Membership test; only meaningful for `n` inside the table's range.
    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }

    /// Primes of the table lying in `[lo, hi]`.
    pub fn slice_between(&self, lo: u64, hi: u64) -> &[u64] {
        let a = self.primes.partition_point(|&p| p < lo);
        let b = self.primes.partition_point(|&p| p <= hi);
        &self.primes[a..b.max(a)]
    }
}

impl<'a> IntoIterator for &'a PrimeTable {
    type Item = &'a u64;
    type IntoIter = std::slice::Iter<'a, u64>;

    fn into_iter(self) -> Self::IntoIter {
        self.primes.iter()
    }
}

pub fn sieve_primes(lo: u64, hi: u64) -> Result<PrimeTable> {
    sieve_primes_with(lo, hi, &SieveConfig::default())
}

/// Segmented sieve of Eratosthenes over `[lo, hi]`.
///
/// Memory is `O(sqrt(hi) + segment_size)` per worker. The output does not
/// depend on `segment_size` or on `parallel`.
pub fn sieve_primes_with(lo: u64, hi: u64, config: &SieveConfig) -> Result<PrimeTable> {
    if lo > hi {
        return Err(Error::invalid(format!("inverted range [{lo}, {hi}]")));
    }
    if config.segment_size == 0 {
        return Err(Error::invalid("segment size must be positive"));
    }
    let start = lo.max(2);
    if start > hi {
        return Ok(PrimeTable {
            range_lo: lo,
            range_hi: hi,
            primes: Vec::new(),
        });
    }
    let base = small_primes(hi.isqrt());
    let seg = config.segment_size as u64;
    let n_segments = (hi - start) / seg + 1;
    let run = |s: u64| {
        let a = start + s * seg;
        let b = a.saturating_add(seg - 1).min(hi);
        sieve_segment(a, b, &base)
    };
    let chunks: Vec<Vec<u64>> = if config.parallel && n_segments > 1 {
        (0..n_segments).into_par_iter().map(run).collect()
    } else {
        (0..n_segments).map(run).collect()
    };
    Ok(PrimeTable {
        range_lo: lo,
        range_hi: hi,
        primes: chunks.concat(),
    })
}

/// Plain Eratosthenes up to `limit` inclusive.
pub(crate) fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn sieve_segment(a: u64, b: u64, base: &[u64]) -> Vec<u64> {
    let len = (b - a + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        let sq = p * p;
        if sq > b {
            break;
        }
        let first = if sq >= a { sq } else { a.div_ceil(p) * p };
        let mut m = first;
        while m <= b {
            composite[(m - a) as usize] = true;
            m = match m.checked_add(p) {
                Some(v) => v,
                None => break,
            };
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| a + i as u64)
        .collect()
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for the full `u64` range (Miller–Rabin with the
/// first twelve prime bases).
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'bases: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub n: u64,
    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn largest_prime(&self) -> Option<u64> {
        self.factors.last().map(|&(p, _)| p)
    }
}

/// Trial-division factorization.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::invalid("cannot factor 0"));
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut push = |m: &mut u64, p: u64| {
        let mut e = 0;
        while (*m).is_multiple_of(p) {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(&mut m, 2);
    push(&mut m, 3);
    let mut p = 5u64;
    while p.saturating_mul(p) <= m {
        push(&mut m, p);
        push(&mut m, p + 2);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { n, factors })
}

pub fn mobius(n: u64) -> Result<i8> {
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.omega() % 2 == 0 { 1 } else { -1 })
}

pub fn euler_phi(d: u64) -> Result<u64> {
    let f = factorize(d)?;
    Ok(f.factors.iter().fold(d, |acc, &(p, _)| acc / p * (p - 1)))
}

/// Number of ordered triples `(a, b, c)` with `abc = d`.
pub fn tau3(d: u64) -> Result<u64> {
    let f = factorize(d)?;
    Ok(f.factors.iter().fold(1, |acc, &(_, e)| {
        let e = e as u64;
        acc * (e + 2) * (e + 1) / 2
    }))
}

/// `ln n` at primes, zero elsewhere.
pub fn theta(n: u64) -> f64 {
    if is_prime(n) {
        (n as f64).ln()
    } else {
        0.0
    }
}

/// `P(n) = prod_i (n + h_i)` as an exact integer.
pub fn poly_p(n: i64, tuple: &AdmissibleTuple) -> Result<BigUint> {
    let mut acc = BigUint::from(1u32);
    for &h in tuple.offsets() {
        let v = n as i128 + h as i128;
        if v <= 0 {
            return Err(Error::invalid(format!(
                "factor n + h = {n} + {h} is not positive"
            )));
        }
        acc *= BigUint::from(v as u128);
    }
    Ok(acc)
}

/// Number of residues `c mod d` with `P(c) ≡ 0 (mod d)`, for squarefree `d`.
pub fn rho2(d: u64, tuple: &AdmissibleTuple) -> Result<u64> {
    let f = factorize(d)?;
    if !f.is_squarefree() {
        return Err(Error::invalid(format!("{d} is not squarefree")));
    }
    let mut acc = 1u64;
    for p in f.primes() {
        acc *= residue_coverage(tuple, p)?;
    }
    Ok(acc)
}
