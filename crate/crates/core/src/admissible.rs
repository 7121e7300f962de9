//! Admissible tuples: verification, construction and the Hardy–Littlewood
//! singular series.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime, sieve_primes, small_primes};
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Verdict of an admissibility check. `witness` is the least prime whose
/// residue classes are all occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub witness: Option<u64>,
}

/// Strictly increasing offsets `0 = h_1 < ... < h_k` that avoid at least one
/// residue class modulo every prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdmissibleTuple {
    offsets: Vec<u64>,
}

impl AdmissibleTuple {
    /// Validates canonical (h_1 = 0), strictly increasing, admissible offsets.
    pub fn new(offsets: Vec<u64>) -> Result<Self> {
        match offsets.first() {
            None => return Err(Error::invalid("tuple must have at least one offset")),
            Some(&h) if h != 0 => {
                return Err(Error::invalid(format!(
                    "tuple is not canonical: first offset is {h}, expected 0"
                )))
            }
            _ => {}
        }
        let verdict = is_admissible(&offsets)?;
        match verdict.witness {
            Some(witness) => Err(Error::Inadmissible { witness }),
            None => Ok(Self { offsets }),
        }
    }

    /// Shifts increasing offsets so that the first is zero, then validates.
    pub fn normalized(offsets: &[u64]) -> Result<Self> {
        let first = *offsets
            .first()
            .ok_or_else(|| Error::invalid("tuple must have at least one offset"))?;
        Self::new(offsets.iter().map(|&h| h.wrapping_sub(first)).collect())
    }

    /// Parses `0,2,6,8,12`. Non-canonical input is rejected unless `normalize`.
    pub fn parse(text: &str, normalize: bool) -> Result<Self> {
        let offsets = text
            .trim()
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid(format!("bad offset {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if normalize {
            check_increasing(&offsets)?;
            Self::normalized(&offsets)
        } else {
            Self::new(offsets)
        }
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn k(&self) -> usize {
        self.offsets.len()
    }

    pub fn width(&self) -> u64 {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn singular_series(&self, p_max: u64) -> Result<SingularSeriesValue> {
        singular_series(&self.offsets, p_max)
    }
}

impl fmt::Display for AdmissibleTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.offsets.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

impl FromStr for AdmissibleTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, false)
    }
}

fn check_increasing(offsets: &[u64]) -> Result<()> {
    if offsets.is_empty() {
        return Err(Error::invalid("tuple must have at least one offset"));
    }
    if offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("offsets must be strictly increasing"));
    }
    Ok(())
}

/// Number of distinct residues of `offsets` modulo `p`.
fn coverage(offsets: &[u64], p: u64) -> u64 {
    if p > offsets[offsets.len() - 1] - offsets[0] {
        return offsets.len() as u64;
    }
    let mut seen = vec![false; p as usize];
    let mut count = 0;
    for &h in offsets {
        let r = (h % p) as usize;
        if !seen[r] {
            seen[r] = true;
            count += 1;
        }
    }
    count
}

/// `nu_p`: how many residue classes mod `p` the tuple occupies.
pub fn residue_coverage(tuple: &AdmissibleTuple, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    Ok(coverage(&tuple.offsets, p))
}

/// Admissibility of strictly increasing offsets.
///
/// A k-element set meets at most k classes, so only primes `p <= k` can be
/// fully covered.
pub fn is_admissible(offsets: &[u64]) -> Result<Admissibility> {
    check_increasing(offsets)?;
    let k = offsets.len() as u64;
    let witness = small_primes(k)
        .into_iter()
        .find(|&p| coverage(offsets, p) == p);
    Ok(Admissibility {
        admissible: witness.is_none(),
        witness,
    })
}

/// First `count` primes after skipping `skip` of them.
fn consecutive_primes(skip: usize, count: usize) -> Vec<u64> {
    let needed = skip + count;
    let n = needed.max(6) as f64;
    let mut bound = (n * (n.ln() + n.ln().ln())).ceil() as u64 + 16;
    loop {
        let table = sieve_primes(2, bound).expect("valid range");
        if table.len() >= needed {
            return table.primes[skip..needed].to_vec();
        }
        bound *= 2;
    }
}

/// Result of the consecutive-primes construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeTupleConstruction {
    pub tuple: AdmissibleTuple,
    /// Number of leading primes skipped; offsets come from p_{m+1}, ..., p_{m+k}.
    pub m: usize,
}

/// Offsets `p_{m+i} - p_{m+1}` for `i = 1..=k`, with `p_1 = 2`.
///
/// Without `auto_shift` an inadmissible result is reported with its witness.
/// With it, `m` is incremented until the tuple is admissible (this always
/// terminates once p_{m+1} > k).
pub fn prime_tuple_construct(
    k: usize,
    m: usize,
    auto_shift: bool,
) -> Result<PrimeTupleConstruction> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut m = m;
    loop {
        let primes = consecutive_primes(m, k);
        let offsets: Vec<u64> = primes.iter().map(|&p| p - primes[0]).collect();
        match AdmissibleTuple::new(offsets) {
            Ok(tuple) => return Ok(PrimeTupleConstruction { tuple, m }),
            Err(Error::Inadmissible { .. }) if auto_shift => m += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Greedy sieve on `[0, window]`: for each prime `p <= k` in increasing order,
/// drop the residue class holding the fewest survivors (smallest residue on
/// ties). Returns the first `k` survivors, if there are that many.
fn greedy_window(k: usize, window: u64, primes: &[u64]) -> Option<Vec<u64>> {
    let mut survivors: Vec<u64> = (0..=window).collect();
    for &p in primes {
        let mut counts = vec![0usize; p as usize];
        for &n in &survivors {
            counts[(n % p) as usize] += 1;
        }
        let (drop, _) = counts
            .iter()
            .enumerate()
            .min_by_key(|&(r, &c)| (c, r))
            .expect("p >= 2");
        survivors.retain(|&n| (n % p) as usize != drop);
        if survivors.len() < k {
            return None;
        }
    }
    survivors.truncate(k);
    Some(survivors)
}

/// Narrow admissible k-tuple by greedy residue sieving.
///
/// Windows `[0, w]` are tried for `w = k-1, k, ..., search_width`; the first
/// window leaving at least `k` survivors wins. Windows are scanned in
/// parallel but the smallest successful `w` is always selected.
pub fn greedy_narrow(k: usize, search_width: u64) -> Result<AdmissibleTuple> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let primes = small_primes(k as u64);
    let start = k as u64 - 1;
    if search_width < start {
        return Err(Error::invalid(format!(
            "search width {search_width} cannot hold {k} distinct offsets"
        )));
    }
    let found = (start..=search_width)
        .into_par_iter()
        .find_map_first(|w| greedy_window(k, w, &primes));
    match found {
        Some(survivors) => AdmissibleTuple::normalized(&survivors),
        None => Err(Error::invalid(format!(
            "no admissible {k}-tuple found by greedy sieving within width {search_width}"
        ))),
    }
}

/// Truncated Hardy–Littlewood constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSeriesValue {
    pub value: f64,
    pub ln_value: f64,
    pub p_max: u64,
    /// Bound on |prod_{p > p_max} factor - 1|.
    pub tail_bound: f64,
    /// Least fully covered prime when the offsets are inadmissible.
    pub witness: Option<u64>,
}

/// `prod_{p <= p_max} (1 - nu_p/p)(1 - 1/p)^{-k}` with a bound on the omitted
/// tail. Inadmissible offsets give value 0 and the witness prime.
pub fn singular_series(offsets: &[u64], p_max: u64) -> Result<SingularSeriesValue> {
    check_increasing(offsets)?;
    let k = offsets.len() as u64;
    if p_max < k {
        return Err(Error::invalid(format!(
            "p_max = {p_max} must be at least k = {k}"
        )));
    }
    let span = offsets[offsets.len() - 1] - offsets[0];
    let ln_factor = |p: u64| {
        let nu = coverage(offsets, p) as f64;
        let pf = p as f64;
        (-nu / pf).ln_1p() - k as f64 * (-1.0 / pf).ln_1p()
    };

    let primes = sieve_primes(2, p_max.max(span))?;
    let mut acc = CompensatedSum::new();
    let mut mid_tail = 0.0;
    for &p in primes.iter() {
        if p <= p_max {
            if coverage(offsets, p) == p {
                return Ok(SingularSeriesValue {
                    value: 0.0,
                    ln_value: f64::NEG_INFINITY,
                    p_max,
                    tail_bound: 0.0,
                    witness: Some(p),
                });
            }
            acc.add(ln_factor(p));
        } else {
            // p_max < p <= span: exact contribution of the omitted factor.
            mid_tail += ln_factor(p).abs();
        }
    }
    // Beyond the span nu_p = k and |ln factor| <= k^2 / (2 p (p - k)).
    let cut = p_max.max(span) as f64;
    let kf = k as f64;
    let far_tail = if k == 1 {
        0.0
    } else {
        kf * kf / (2.0 * (cut + 1.0 - kf))
    };
    let ln_value = acc.value();
    Ok(SingularSeriesValue {
        value: ln_value.exp(),
        ln_value,
        p_max,
        tail_bound: (mid_tail + far_tail).exp_m1(),
        witness: None,
    })
}
