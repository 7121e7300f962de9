//! Residue-class discrepancies of θ over a short interval:
//!
//! ```text
//! Δ(γ; d, c) = Σ_{n ≡ c (d), x ≤ n ≤ x+Δ} γ(n) − (1/φ(d)) Σ_{x ≤ n ≤ x+Δ} γ(n),   (c, d) = 1
//! ```
//!
//! aggregated over squarefree D1-smooth moduli `d < D²` and the classes
//! `C_i(d)`, together with the weighted error terms `E_i` and their
//! Cauchy–Schwarz majorant.

use std::collections::HashMap;
use std::io::{self, Write};

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::admissible::AdmissibleTuple;
use crate::arith::{euler_phi, factorize, rho2, sieve_primes, small_primes, tau3};
use crate::error::{Error, Result};
use crate::interval::IntervalSpec;
use crate::summation::CompensatedSum;
use crate::weights::{EvalConfig, SieveParams};

/// Most moduli a single report may enumerate.
pub const MAX_MODULI: u64 = 10_000_000;

/// Arithmetic function whose distribution is measured.
#[derive(Debug, Clone, PartialEq)]
pub enum Gamma {
    /// θ(n) = ln n at primes.
    Theta,
    /// `values[i] = γ(lo + i)`; must cover the interval.
    Tabulated { lo: u64, values: Vec<f64> },
}

/// Nonzero values of γ on an interval, plus their total.
#[derive(Debug, Clone)]
pub struct GammaTable {
    entries: Vec<(u64, f64)>,
    total: f64,
}

impl GammaTable {
    pub fn new(gamma: &Gamma, interval: &IntervalSpec) -> Result<Self> {
        let entries: Vec<(u64, f64)> = match gamma {
            Gamma::Theta => sieve_primes(interval.lo(), interval.hi())?
                .iter()
                .map(|&p| (p, (p as f64).ln()))
                .collect(),
            Gamma::Tabulated { lo, values } => {
                let end = lo + values.len() as u64;
                if *lo > interval.lo() || end <= interval.hi() {
                    return Err(Error::invalid(
                        "tabulated function does not cover the interval",
                    ));
                }
                interval
                    .iter()
                    .map(|n| (n, values[(n - lo) as usize]))
                    .filter(|&(_, v)| v != 0.0)
                    .collect()
            }
        };
        let total = entries
            .iter()
            .map(|&(_, v)| v)
            .collect::<CompensatedSum>()
            .value();
        Ok(Self { entries, total })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `Δ(γ; d, c)` for each requested `c`, in input order. Every `c` must be
    /// a representative in `[1, d]`.
    pub fn discrepancies(&self, d: u64, classes: &[u64]) -> Result<Vec<f64>> {
        let phi = euler_phi(d)? as f64;
        let index: HashMap<u64, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, &c)| (c % d, i))
            .collect();
        let mut sums = vec![CompensatedSum::new(); classes.len()];
        for &(n, v) in &self.entries {
            if let Some(&i) = index.get(&(n % d)) {
                sums[i].add(v);
            }
        }
        let mean = self.total / phi;
        Ok(sums.iter().map(|s| s.value() - mean).collect())
    }

    /// `(c, Δ(γ; d, c))` for every class `c` coprime to `d`.
    pub fn all_coprime_classes(&self, d: u64) -> Result<Vec<(u64, f64)>> {
        let classes: Vec<u64> = (1..=d).filter(|c| c.gcd(&d) == 1).collect();
        let deltas = self.discrepancies(d, &classes)?;
        Ok(classes.into_iter().zip(deltas).collect())
    }
}

/// `Δ(γ; d, c)` over the closed interval.
pub fn discrepancy_delta(gamma: &Gamma, d: u64, c: u64, interval: &IntervalSpec) -> Result<f64> {
    if d == 0 || c == 0 || c > d {
        return Err(Error::invalid(format!(
            "need 1 <= c <= d, got c = {c}, d = {d}"
        )));
    }
    if c.gcd(&d) != 1 {
        return Err(Error::invalid(format!("c = {c} is not coprime to d = {d}")));
    }
    Ok(GammaTable::new(gamma, interval)?.discrepancies(d, &[c])?[0])
}

/// `C_i(d)`: classes `c` in `[1, d]` coprime to `d` with `P(c − h_i) ≡ 0 (mod d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueSet {
    pub d: u64,
    /// Zero-based tuple index.
    pub index: usize,
    pub residues: Vec<u64>,
}

fn check_smooth_modulus(d: u64, params: &SieveParams) -> Result<Vec<u64>> {
    let f = factorize(d)?;
    if !f.is_squarefree() {
        return Err(Error::invalid(format!("modulus {d} is not squarefree")));
    }
    if let Some(p) = f.largest_prime().filter(|&p| p > params.d1) {
        return Err(Error::invalid(format!(
            "modulus {d} has prime factor {p} above D1 = {}",
            params.d1
        )));
    }
    Ok(f.primes().collect())
}

/// Per-prime classes for `C_i`: `h_i − h_j (mod p)` with the zero class removed.
fn local_classes(tuple: &AdmissibleTuple, index: usize, p: u64) -> Vec<u64> {
    let hi = tuple.offsets()[index];
    let mut r: Vec<u64> = tuple
        .offsets()
        .iter()
        .map(|&hj| ((hi % p) + p - (hj % p)) % p)
        .filter(|&r| r != 0)
        .collect();
    r.sort_unstable();
    r.dedup();
    r
}

/// Chinese remaindering of per-prime class lists into classes mod the product.
fn crt_combine(primes: &[u64], locals: &[Vec<u64>]) -> Vec<u64> {
    let mut modulus = 1u64;
    let mut classes = vec![0u64];
    for (&p, local) in primes.iter().zip(locals) {
        // inverse of modulus mod p
        let m_mod_p = modulus % p;
        let inv = mod_inverse(m_mod_p, p);
        let mut next = Vec::with_capacity(classes.len() * local.len());
        for &a in &classes {
            for &b in local {
                let t = ((b + p - a % p) % p) as u128 * inv as u128 % p as u128;
                next.push(a + modulus * t as u64);
            }
        }
        modulus *= p;
        classes = next;
    }
    classes.sort_unstable();
    classes
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    if p == 1 {
        return 0;
    }
    let e = (a as i128).extended_gcd(&(p as i128));
    e.x.rem_euclid(p as i128) as u64
}

/// `C_i(d)` for a squarefree modulus whose primes are all at most D1.
pub fn residue_set(
    d: u64,
    tuple: &AdmissibleTuple,
    index: usize,
    params: &SieveParams,
) -> Result<ResidueSet> {
    if index >= tuple.k() {
        return Err(Error::invalid(format!(
            "index {index} out of range for a {}-tuple",
            tuple.k()
        )));
    }
    let primes = check_smooth_modulus(d, params)?;
    let locals: Vec<Vec<u64>> = primes
        .iter()
        .map(|&p| local_classes(tuple, index, p))
        .collect();
    let residues = crt_combine(&primes, &locals)
        .into_iter()
        .map(|r| if r == 0 { d } else { r })
        .collect();
    Ok(ResidueSet { d, index, residues })
}

/// Squarefree products of primes `<= d1` below `cap`, ascending.
pub fn smooth_squarefree_moduli(d1: u64, cap: u64) -> Result<Vec<u64>> {
    fn walk(primes: &[u64], d: u64, cap: u64, out: &mut Vec<u64>) -> Result<()> {
        for (i, &p) in primes.iter().enumerate() {
            let next = match d.checked_mul(p) {
                Some(v) if v < cap => v,
                _ => break,
            };
            if out.len() as u64 >= MAX_MODULI {
                return Err(Error::Resource {
                    cap: "max_moduli",
                    requested: out.len() as u64 + 1,
                    limit: MAX_MODULI,
                });
            }
            out.push(next);
            walk(&primes[i + 1..], next, cap, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    if cap > 1 {
        out.push(1);
        walk(&small_primes(d1), 1, cap, &mut out)?;
    }
    out.sort_unstable();
    Ok(out)
}

/// Discrepancies for one modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusDiscrepancy {
    pub d: u64,
    pub tau3: u64,
    pub rho2: u64,
    /// `(c, Δ(θ; d, c))` for every `c` in the union of the `C_i(d)`.
    pub classes: Vec<(u64, f64)>,
    /// `Σ_{c ∈ C_i(d)} |Δ(θ; d, c)|` per tuple index.
    pub abs_sums: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub interval: IntervalSpec,
    pub d_cap: u64,
    pub per_modulus: Vec<ModulusDiscrepancy>,
    /// `Σ_d Σ_{c ∈ C_i(d)} |Δ|` per tuple index.
    pub bv_sums: Vec<f64>,
    /// Largest entry of `bv_sums`.
    pub bv_sum: f64,
    /// `E_i = Σ_d τ3(d) ρ2(d) Σ_{c ∈ C_i(d)} |Δ|`.
    pub e_terms: Vec<f64>,
    /// `sqrt(Σ_d τ3² ρ2² Σ_c |Δ|) · sqrt(Σ_d Σ_c |Δ|)`.
    pub cauchy_rhs: Vec<f64>,
    pub b_exponent: f64,
    /// `Δ(x) (ln x)^{-B}`.
    pub target: f64,
}

impl DiscrepancyReport {
    /// `bv_sum / (Δ(x) (ln x)^{-B})`.
    pub fn ratio_at_b(&self) -> f64 {
        self.bv_sum / self.target
    }

    /// `bv_sum / Δ(x)`.
    pub fn relative_bv(&self) -> f64 {
        self.bv_sum / self.interval.delta().max(1) as f64
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "bv_sum": self.bv_sum,
            "bv_sums": self.bv_sums,
            "e_terms": self.e_terms,
            "cauchy_rhs": self.cauchy_rhs,
            "ratio_at_B": self.ratio_at_b(),
            "B": self.b_exponent,
            "target": self.target,
            "moduli": self.per_modulus.len(),
            "d_cap": self.d_cap,
            "interval": { "lo": self.interval.lo(), "hi": self.interval.hi(), "delta": self.interval.delta() },
        })
    }

    /// CSV `d,c,delta`, ascending in `d` then `c`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "d,c,delta")?;
        for m in &self.per_modulus {
            for &(c, delta) in &m.classes {
                writeln!(out, "{},{c},{delta:.16e}", m.d)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyOptions {
    /// Exclusive upper bound on moduli; defaults to `D²`.
    pub d_cap: Option<u64>,
    pub b_exponent: f64,
    pub eval: EvalConfig,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        Self {
            d_cap: None,
            b_exponent: 1.0,
            eval: EvalConfig::default(),
        }
    }
}

pub fn discrepancy_report(
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    opts: &DiscrepancyOptions,
) -> Result<DiscrepancyReport> {
    if tuple.k() != params.k0 {
        return Err(Error::invalid(format!(
            "tuple has {} offsets but k0 = {}",
            tuple.k(),
            params.k0
        )));
    }
    let d_sq = params.d_squared();
    let d_cap = opts.d_cap.unwrap_or(d_sq);
    if d_cap > d_sq {
        return Err(Error::invalid(format!(
            "d_cap = {d_cap} exceeds D^2 = {d_sq}"
        )));
    }
    if interval.len() > opts.eval.max_batch_len {
        return Err(Error::Resource {
            cap: "max_batch_len",
            requested: interval.len(),
            limit: opts.eval.max_batch_len,
        });
    }
    let moduli = smooth_squarefree_moduli(params.d1, d_cap)?;
    let table = GammaTable::new(&Gamma::Theta, interval)?;
    let k = tuple.k();

    let per = |d: u64| -> Result<ModulusDiscrepancy> {
        let sets = (0..k)
            .map(|i| residue_set(d, tuple, i, params).map(|s| s.residues))
            .collect::<Result<Vec<_>>>()?;
        let mut union: Vec<u64> = sets.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        let deltas = table.discrepancies(d, &union)?;
        let classes: Vec<(u64, f64)> = union.into_iter().zip(deltas).collect();
        let abs_sums = sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|c| {
                        let pos = classes
                            .binary_search_by_key(c, |&(cc, _)| cc)
                            .expect("in union");
                        classes[pos].1.abs()
                    })
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect();
        Ok(ModulusDiscrepancy {
            d,
            tau3: tau3(d)?,
            rho2: rho2(d, tuple)?,
            classes,
            abs_sums,
        })
    };
    let per_modulus: Vec<ModulusDiscrepancy> = if opts.eval.parallel {
        moduli.par_iter().map(|&d| per(d)).collect::<Result<_>>()?
    } else {
        moduli.iter().map(|&d| per(d)).collect::<Result<_>>()?
    };

    let mut bv_sums = Vec::with_capacity(k);
    let mut e_terms = Vec::with_capacity(k);
    let mut cauchy_rhs = Vec::with_capacity(k);
    for i in 0..k {
        let mut plain = CompensatedSum::new();
        let mut weighted = CompensatedSum::new();
        let mut squared = CompensatedSum::new();
        for m in &per_modulus {
            let a = m.abs_sums[i];
            let w = (m.tau3 * m.rho2) as f64;
            plain.add(a);
            weighted.add(w * a);
            squared.add(w * w * a);
        }
        bv_sums.push(plain.value());
        e_terms.push(weighted.value());
        cauchy_rhs.push(squared.value().sqrt() * plain.value().sqrt());
    }
    let bv_sum = bv_sums.iter().copied().fold(0.0, f64::max);
    let xf = interval.x as f64;
    let target = interval.delta() as f64 * xf.ln().powf(-opts.b_exponent);
    Ok(DiscrepancyReport {
        interval: *interval,
        d_cap,
        per_modulus,
        bv_sums,
        bv_sum,
        e_terms,
        cauchy_rhs,
        b_exponent: opts.b_exponent,
        target,
    })
}

/// `Σ_{d < d_cap, d | 𝒫} Σ_{c ∈ C_i(d)} |Δ(θ; d, c)|` for tuple index `i`.
pub fn bv_sum(
    index: usize,
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    d_cap: Option<u64>,
) -> Result<f64> {
    if index >= tuple.k() {
        return Err(Error::invalid(format!("index {index} out of range")));
    }
    let opts = DiscrepancyOptions {
        d_cap,
        ..DiscrepancyOptions::default()
    };
    Ok(discrepancy_report(interval, tuple, params, &opts)?.bv_sums[index])
}

/// `(E_i, Cauchy–Schwarz right side)` for tuple index `i`.
pub fn error_term_ei(
    index: usize,
    interval: &IntervalSpec,
    tuple: &AdmissibleTuple,
    params: &SieveParams,
    d_cap: Option<u64>,
) -> Result<(f64, f64)> {
    if index >= tuple.k() {
        return Err(Error::invalid(format!("index {index} out of range")));
    }
    let opts = DiscrepancyOptions {
        d_cap,
        ..DiscrepancyOptions::default()
    };
    let report = discrepancy_report(interval, tuple, params, &opts)?;
    Ok((report.e_terms[index], report.cauchy_rhs[index]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{is_prime, mobius};
    use num_rational::Ratio;

    fn tuple(offsets: &[u64]) -> AdmissibleTuple {
        AdmissibleTuple::new(offsets.to_vec()).unwrap()
    }

    fn desk(k0: usize, d: u64, d1: u64) -> SieveParams {
        SieveParams::new(k0, 1, Ratio::new(1, 4), 10_000)
            .unwrap()
            .with_levels(d, d1)
            .unwrap()
    }

    fn brute_delta(d: u64, c: u64, lo: u64, hi: u64) -> f64 {
        let theta = |n: u64| if is_prime(n) { (n as f64).ln() } else { 0.0 };
        let phi = (1..=d).filter(|k| k.gcd(&d) == 1).count() as f64;
        let class: f64 = (lo..=hi).filter(|n| n % d == c % d).map(theta).sum();
        let all: f64 = (lo..=hi).map(theta).sum();
        class - all / phi
    }

    fn brute_residues(d: u64, offsets: &[u64], i: usize) -> Vec<u64> {
        (1..=d)
            .filter(|&c| c.gcd(&d) == 1)
            .filter(|&c| {
                offsets.iter().fold(1u64, |acc, &hj| {
                    // c - h_i + h_j reduced mod d, kept nonnegative
                    let v = (c + d * (offsets[i] / d + 1) - offsets[i] + hj) % d;
                    acc * v % d
                }) == 0
            })
            .collect()
    }

    #[test]
    fn delta_examples() {
        let iv = IntervalSpec::explicit(10, 10).unwrap();
        assert_eq!(discrepancy_delta(&Gamma::Theta, 1, 1, &iv).unwrap(), 0.0);
        let v = discrepancy_delta(&Gamma::Theta, 3, 1, &iv).unwrap();
        let expected =
            13f64.ln() + 19f64.ln() - 0.5 * (11f64.ln() + 13f64.ln() + 17f64.ln() + 19f64.ln());
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 0.1392).abs() < 1e-3);
        let gap = IntervalSpec::explicit(114, 12).unwrap();
        assert_eq!(discrepancy_delta(&Gamma::Theta, 7, 3, &gap).unwrap(), 0.0);
        assert!(discrepancy_delta(&Gamma::Theta, 6, 4, &iv).is_err());
        assert!(discrepancy_delta(&Gamma::Theta, 6, 7, &iv).is_err());
    }

    #[test]
    fn tabulated_gamma() {
        let iv = IntervalSpec::explicit(10, 9).unwrap();
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let gamma = Gamma::Tabulated { lo: 5, values };
        // n in 10..=19 has gamma(n) = n - 5; class 1 mod 2 holds 11,13,...,19.
        let v = discrepancy_delta(&gamma, 2, 1, &iv).unwrap();
        let class: f64 = [6.0, 8.0, 10.0, 12.0, 14.0].iter().sum();
        let total: f64 = (5..15).map(|k| k as f64).sum();
        assert!((v - (class - total)).abs() < 1e-12);
        let short = Gamma::Tabulated {
            lo: 12,
            values: vec![1.0; 3],
        };
        assert!(discrepancy_delta(&short, 2, 1, &iv).is_err());
    }

    #[test]
    fn delta_matches_brute_force() {
        let iv = IntervalSpec::explicit(1000, 3000).unwrap();
        let table = GammaTable::new(&Gamma::Theta, &iv).unwrap();
        for d in [1u64, 2, 6, 7, 30, 97, 210] {
            for (c, v) in table.all_coprime_classes(d).unwrap() {
                assert!(
                    (v - brute_delta(d, c, 1000, 4000)).abs() < 1e-9,
                    "d={d} c={c}"
                );
            }
        }
    }

    #[test]
    fn residue_set_examples() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 100, 10);
        assert_eq!(residue_set(1, &t, 0, &p).unwrap().residues, vec![1]);
        assert_eq!(brute_residues(3, &[0, 2], 0), vec![1]);
        assert_eq!(residue_set(3, &t, 0, &p).unwrap().residues, vec![1]);
        assert!(residue_set(4, &t, 0, &p).is_err());
        assert!(residue_set(11, &t, 0, &p).is_err());
        assert!(residue_set(3, &t, 2, &p).is_err());
    }

    #[test]
    fn residue_sets_match_brute_force() {
        let offsets = [0u64, 4, 6, 10, 12, 16];
        let t = tuple(&offsets);
        let p = desk(6, 10_000, 10_000);
        for d in 1..=3000u64 {
            if mobius(d).unwrap() == 0 {
                continue;
            }
            for i in 0..offsets.len() {
                let set = residue_set(d, &t, i, &p).unwrap();
                assert_eq!(set.residues, brute_residues(d, &offsets, i), "d={d} i={i}");
                let omega = factorize(d).unwrap().omega() as u32;
                assert!(set.residues.len() as u64 <= 6u64.pow(omega));
            }
        }
    }

    #[test]
    fn moduli_enumeration() {
        assert_eq!(smooth_squarefree_moduli(1, 100).unwrap(), vec![1]);
        assert_eq!(
            smooth_squarefree_moduli(5, 30).unwrap(),
            vec![1, 2, 3, 5, 6, 10, 15]
        );
        assert!(smooth_squarefree_moduli(5, 1).unwrap().is_empty());
        let brute: Vec<u64> = (1..5000u64)
            .filter(|&d| {
                mobius(d).unwrap() != 0 && factorize(d).unwrap().largest_prime().unwrap_or(1) <= 30
            })
            .collect();
        assert_eq!(smooth_squarefree_moduli(30, 5000).unwrap(), brute);
    }

    #[test]
    fn empty_smooth_support_gives_zero() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 100, 1);
        let iv = IntervalSpec::explicit(1000, 500).unwrap();
        assert_eq!(bv_sum(0, &iv, &t, &p, None).unwrap(), 0.0);
        assert_eq!(error_term_ei(1, &iv, &t, &p, None).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn bv_sum_matches_double_loop() {
        let offsets = [0u64, 2, 6];
        let t = tuple(&offsets);
        let p = desk(3, 40, 7);
        let iv = IntervalSpec::explicit(10_000, 10_000).unwrap();
        for i in 0..3 {
            let mut oracle = 0.0;
            for d in 1..p.d_squared() {
                if mobius(d).unwrap() == 0 || factorize(d).unwrap().largest_prime().unwrap_or(1) > 7
                {
                    continue;
                }
                for c in brute_residues(d, &offsets, i) {
                    oracle += brute_delta(d, c, 10_000, 20_000).abs();
                }
            }
            let v = bv_sum(i, &iv, &t, &p, None).unwrap();
            assert!(
                (v - oracle).abs() <= 1e-9 * oracle.max(1.0),
                "i={i}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn bv_sum_monotone_in_cap() {
        let t = tuple(&[0, 2, 6]);
        let p = desk(3, 100, 13);
        let iv = IntervalSpec::explicit(50_000, 5_000).unwrap();
        let mut last = 0.0;
        for cap in [1u64, 2, 10, 100, 1000, 10_000] {
            let v = bv_sum(0, &iv, &t, &p, Some(cap)).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!(bv_sum(0, &iv, &t, &p, Some(10_001)).is_err());
    }

    #[test]
    fn cauchy_schwarz_single_and_many() {
        let t = tuple(&[0, 2, 6]);
        let p = desk(3, 100, 13);
        let iv = IntervalSpec::explicit(50_000, 5_000).unwrap();
        // Below 4 only d = 3 contributes: d = 1 has zero discrepancy and C_0(2) is empty.
        let (e, rhs) = error_term_ei(0, &iv, &t, &p, Some(4)).unwrap();
        assert!(e > 0.0);
        assert!((e - rhs).abs() <= 1e-12 * e);
        let report = discrepancy_report(&iv, &t, &p, &DiscrepancyOptions::default()).unwrap();
        for i in 0..3 {
            assert!(report.e_terms[i] < report.cauchy_rhs[i]);
        }
    }

    #[test]
    fn telescoping_identity() {
        let iv = IntervalSpec::explicit(2, 20_000).unwrap();
        let table = GammaTable::new(&Gamma::Theta, &iv).unwrap();
        for d in 1..=200u64 {
            let sum: f64 = table
                .all_coprime_classes(d)
                .unwrap()
                .iter()
                .map(|&(_, v)| v)
                .sum();
            let expected: f64 = factorize(d)
                .unwrap()
                .primes()
                .filter(|&p| iv.contains(p))
                .map(|p| -(p as f64).ln())
                .sum();
            assert!((sum - expected).abs() < 1e-9, "d = {d}");
        }
    }

    #[test]
    fn trivial_class_envelope() {
        let iv = IntervalSpec::explicit(100_000, 20_000).unwrap();
        let table = GammaTable::new(&Gamma::Theta, &iv).unwrap();
        let ln_hi = (iv.hi() as f64).ln();
        for d in [3u64, 10, 77, 210, 1001] {
            let phi = euler_phi(d).unwrap() as f64;
            for (c, v) in table.all_coprime_classes(d).unwrap() {
                let count = iv.iter().filter(|n| n % d == c % d).count() as f64;
                assert!(v.abs() <= (count * ln_hi).max(table.total() / phi));
            }
        }
    }

    #[test]
    fn report_outputs() {
        let t = tuple(&[0, 2]);
        let p = desk(2, 30, 5);
        let iv = IntervalSpec::explicit(1000, 1000).unwrap();
        let report = discrepancy_report(&iv, &t, &p, &DiscrepancyOptions::default()).unwrap();
        let summary = report.summary_json();
        for key in ["bv_sum", "e_terms", "cauchy_rhs", "ratio_at_B"] {
            assert!(summary.get(key).is_some());
        }
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d,c,delta\n"));
        let rows = report
            .per_modulus
            .iter()
            .map(|m| m.classes.len())
            .sum::<usize>();
        assert_eq!(text.lines().count(), rows + 1);
        let seq = discrepancy_report(
            &iv,
            &t,
            &p,
            &DiscrepancyOptions {
                eval: EvalConfig::sequential(),
                ..DiscrepancyOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq, report);
    }
}
