//! Signed log-space reals, log-factorials, and the positivity constant ω of
//! the S2 − log(3x)·S1 main term.
//!
//! Quantities such as `1/(k0 + 2 l0)!` with `k0 = 3.5e6` lie far below the
//! smallest positive `f64`; they are carried as a sign plus a natural log
//! magnitude and only converted to decimal at the output boundary.

use std::cmp::Ordering;
use std::f64::consts::{LN_10, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Relative magnitude gap under which an opposite-sign sum is flagged as a
/// possible total cancellation.
pub const CANCELLATION_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self as i8) * (other as i8) {
            1 => Sign::Positive,
            -1 => Sign::Negative,
            _ => Sign::Zero,
        }
    }

    pub fn as_f64(self) -> f64 {
        self as i8 as f64
    }
}

/// `sign * exp(ln_mag)`. Zero is stored as `(Zero, -inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogReal {
    sign: Sign,
    ln_mag: f64,
}

/// Outcome of a log-space addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSum {
    pub value: LogReal,
    /// Opposite-sign operands agreed in magnitude to within
    /// [`CANCELLATION_TOLERANCE`], so the result may be pure rounding noise.
    pub cancellation_suspect: bool,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: Sign::Zero,
        ln_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogReal = LogReal {
        sign: Sign::Positive,
        ln_mag: 0.0,
    };

    /// `sign * exp(ln_mag)`; panics on a non-finite magnitude for nonzero sign.
    pub fn new(sign: Sign, ln_mag: f64) -> Self {
        if sign == Sign::Zero {
            return Self::ZERO;
        }
        assert!(
            ln_mag.is_finite(),
            "log magnitude must be finite, got {ln_mag}"
        );
        Self { sign, ln_mag }
    }

    /// The positive number `exp(ln_mag)`.
    pub fn from_ln(ln_mag: f64) -> Self {
        Self::new(Sign::Positive, ln_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            Self::from_ln(x.ln())
        } else {
            Self::new(Sign::Negative, (-x).ln())
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Natural log of |value|; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.ln_mag
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Nearest `f64`, which underflows to ±0 or overflows to ±inf when out of range.
    pub fn to_f64(&self) -> f64 {
        self.sign.as_f64() * self.ln_mag.exp()
    }

    pub fn abs(&self) -> Self {
        if self.is_zero() {
            *self
        } else {
            Self::from_ln(self.ln_mag)
        }
    }

    /// `self^exponent` for positive values.
    pub fn powf(&self, exponent: f64) -> Result<Self> {
        if self.sign != Sign::Positive {
            return Err(Error::invalid("powf requires a positive base"));
        }
        Ok(Self::from_ln(self.ln_mag * exponent))
    }

    pub fn checked_add(self, rhs: LogReal) -> LogSum {
        if rhs.is_zero() {
            return LogSum {
                value: self,
                cancellation_suspect: false,
            };
        }
        if self.is_zero() {
            return LogSum {
                value: rhs,
                cancellation_suspect: false,
            };
        }
        let (big, small) = if self.ln_mag >= rhs.ln_mag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let ratio = (small.ln_mag - big.ln_mag).exp();
        if big.sign == small.sign {
            return LogSum {
                value: Self::new(big.sign, big.ln_mag + ratio.ln_1p()),
                cancellation_suspect: false,
            };
        }
        if ratio == 1.0 {
            return LogSum {
                value: Self::ZERO,
                cancellation_suspect: false,
            };
        }
        LogSum {
            value: Self::new(big.sign, big.ln_mag + (-ratio).ln_1p()),
            cancellation_suspect: 1.0 - ratio < CANCELLATION_TOLERANCE,
        }
    }

    pub fn checked_div(self, rhs: LogReal) -> Result<LogReal> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(Self::new(
            self.sign.times(rhs.sign),
            self.ln_mag - rhs.ln_mag,
        ))
    }
}

impl Default for LogReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Add for LogReal {
    type Output = LogReal;

    fn add(self, rhs: LogReal) -> LogReal {
        self.checked_add(rhs).value
    }
}

impl Neg for LogReal {
    type Output = LogReal;

    fn neg(self) -> LogReal {
        LogReal {
            sign: self.sign.flip(),
            ln_mag: self.ln_mag,
        }
    }
}

impl Sub for LogReal {
    type Output = LogReal;

    fn sub(self, rhs: LogReal) -> LogReal {
        self + (-rhs)
    }
}

impl Mul for LogReal {
    type Output = LogReal;

    fn mul(self, rhs: LogReal) -> LogReal {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.sign.times(rhs.sign), self.ln_mag + rhs.ln_mag)
    }
}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                Sign::Zero => Some(Ordering::Equal),
                Sign::Positive => self.ln_mag.partial_cmp(&other.ln_mag),
                Sign::Negative => other.ln_mag.partial_cmp(&self.ln_mag),
            },
            ord => Some(ord),
        }
    }
}

/// `mantissa * 10^exponent` with `1 <= |mantissa| < 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decimal {
    pub mantissa: f64,
    pub exponent: i64,
}

impl Decimal {
    /// Natural log of |value|.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.exponent as f64 * LN_10
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(4);
        write!(f, "{:.*}e{}", digits, self.mantissa, self.exponent)
    }
}

pub fn render_decimal(x: LogReal) -> Result<Decimal> {
    if x.is_zero() {
        return Err(Error::invalid("zero has no decimal mantissa"));
    }
    let log10 = x.ln_mag / LN_10;
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    if mantissa >= 10.0 {
        mantissa /= 10.0;
        exponent += 1.0;
    }
    Ok(Decimal {
        mantissa: x.sign.as_f64() * mantissa,
        exponent: exponent as i64,
    })
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match render_decimal(*self) {
            Ok(d) => d.fmt(f),
            Err(_) => f.write_str("0"),
        }
    }
}

/// Threshold below which `ln((n-1)!)` is summed term by term.
const STIRLING_CUTOFF: u64 = 32;

/// `B_{2j} / (2j (2j - 1))` for j = 1..=7.
const STIRLING_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

/// `ln Γ(n) = ln((n-1)!)`.
pub fn log_gamma(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("log_gamma is undefined at 0"));
    }
    if n <= STIRLING_CUTOFF {
        return log_gamma_exact(n);
    }
    let z = n as f64;
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut pow = inv;
    for c in STIRLING_COEFFS {
        corr += c * pow;
        pow *= inv2;
    }
    Ok((z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + corr)
}

/// Largest argument accepted by [`log_gamma_exact`].
pub const EXACT_LOG_GAMMA_LIMIT: u64 = 10_000_000;

/// `sum_{k < n} ln k` with compensated accumulation; a slow cross-check for
/// [`log_gamma`].
pub fn log_gamma_exact(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("log_gamma is undefined at 0"));
    }
    if n > EXACT_LOG_GAMMA_LIMIT {
        return Err(Error::Resource {
            cap: "exact_log_gamma",
            requested: n,
            limit: EXACT_LOG_GAMMA_LIMIT,
        });
    }
    Ok((2..n)
        .map(|k| (k as f64).ln())
        .collect::<CompensatedSum>()
        .value())
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("binomial C({n}, {k}) out of range")));
    }
    Ok(log_gamma(n + 1)? - log_gamma(k + 1)? - log_gamma(n - k + 1)?)
}

/// `ln n!`.
pub fn log_factorial(n: u64) -> f64 {
    log_gamma(n + 1).expect("n + 1 >= 1")
}

/// Inputs to ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaParams {
    pub k0: u64,
    pub l0: u64,
    #[serde(serialize_with = "serialize_ratio")]
    pub varpi: Ratio<u64>,
    pub kappa1: LogReal,
    pub kappa2: LogReal,
}

pub(crate) fn serialize_ratio<S: serde::Serializer>(
    r: &Ratio<u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

impl OmegaParams {
    /// k0 = 3.5e6, l0 = 180, varpi = 1/1168 with kappa1 = exp(-1200),
    /// kappa2 = 1e8 exp(-1200).
    pub fn paper() -> Self {
        Self {
            k0: 3_500_000,
            l0: 180,
            varpi: Ratio::new(1, 1168),
            kappa1: default_kappa1(),
            kappa2: default_kappa2(),
        }
    }

    pub fn with_kappas(mut self, kappa1: LogReal, kappa2: LogReal) -> Self {
        self.kappa1 = kappa1;
        self.kappa2 = kappa2;
        self
    }
}

pub fn default_kappa1() -> LogReal {
    LogReal::from_ln(-1200.0)
}

pub fn default_kappa2() -> LogReal {
    LogReal::from_ln(8.0 * LN_10 - 1200.0)
}

/// The bracket `2(2l0+1)k0(1-κ2)/((l0+1)(k0+2l0+1)) - 4(1+κ1)/(1+4ϖ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaBracket {
    /// Value at κ1 = κ2 = 0, from exact rational arithmetic.
    pub without_kappa: f64,
    /// `a κ2 + b κ1`, subtracted from the κ-free value.
    pub kappa_shift: LogReal,
    pub value: LogReal,
}

fn big_ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn omega_bracket(p: &OmegaParams) -> Result<OmegaBracket> {
    if p.k0 == 0 || p.l0 == 0 {
        return Err(Error::invalid("k0 and l0 must be positive"));
    }
    if *p.varpi.denom() == 0 {
        return Err(Error::invalid("varpi denominator is zero"));
    }
    let (k0, l0) = (p.k0, p.l0);
    let first = big_ratio(2 * (2 * l0 + 1), l0 + 1) * big_ratio(k0, k0 + 2 * l0 + 1);
    let (vn, vd) = (
        BigInt::from(*p.varpi.numer()),
        BigInt::from(*p.varpi.denom()),
    );
    // 4 / (1 + 4 n/d) = 4 d / (d + 4 n)
    let second = BigRational::new(BigInt::from(4) * &vd, &vd + BigInt::from(4) * vn);
    let exact = &first - &second;
    let without_kappa = exact
        .to_f64()
        .ok_or_else(|| Error::invalid("bracket not representable"))?;
    let a = LogReal::from_f64(first.to_f64().expect("finite"));
    let b = LogReal::from_f64(second.to_f64().expect("finite"));
    let kappa_shift = a * p.kappa2 + b * p.kappa1;
    Ok(OmegaBracket {
        without_kappa,
        kappa_shift,
        value: LogReal::from_f64(without_kappa) - kappa_shift,
    })
}

/// `ω = C(2l0, l0) / (k0 + 2l0)! * bracket`. A negative bracket gives a
/// negative ω, which is reported rather than rejected.
pub fn omega_constant(p: &OmegaParams) -> Result<LogReal> {
    let bracket = omega_bracket(p)?;
    let scale = LogReal::from_ln(log_binomial(2 * p.l0, p.l0)? - log_factorial(p.k0 + 2 * p.l0));
    Ok(scale * bracket.value)
}

/// Strict test `ln ω > ln_threshold`.
pub fn verify_omega_threshold(omega: LogReal, ln_threshold: f64) -> Result<bool> {
    if omega.sign() != Sign::Positive {
        return Err(Error::invalid("omega must be positive"));
    }
    Ok(omega.ln_abs() > ln_threshold)
}
