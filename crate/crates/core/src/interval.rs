use serde::Serialize;

use crate::error::{Error, Result};

/// How the interval length Δ(x) is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Explicit(u64),
    /// Δ(x) = ⌊x / (ln x)^A⌋.
    LogPower(f64),
}

/// The closed interval `[x, x + Δ(x)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalSpec {
    pub x: u64,
    pub delta_mode: DeltaMode,
    delta: u64,
}

impl IntervalSpec {
    pub fn explicit(x: u64, delta: u64) -> Result<Self> {
        if x == 0 {
            return Err(Error::invalid("x must be positive"));
        }
        if x.checked_add(delta).is_none() {
            return Err(Error::invalid("x + delta overflows u64"));
        }
        Ok(Self {
            x,
            delta_mode: DeltaMode::Explicit(delta),
            delta,
        })
    }

    /// `[x, x + x (ln x)^{-A}]`.
    pub fn log_power(x: u64, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid(format!(
                "exponent A = {a} must be finite and >= 0"
            )));
        }
        if x < 2 && a > 0.0 {
            return Err(Error::invalid("x must be at least 2 when A > 0"));
        }
        let xf = x as f64;
        let delta = (xf / xf.ln().powf(a)).floor();
        if !(delta.is_finite() && delta >= 0.0 && delta <= (u64::MAX - x) as f64) {
            return Err(Error::invalid(format!(
                "delta(x) = {delta} is out of range"
            )));
        }
        Ok(Self {
            x,
            delta_mode: DeltaMode::LogPower(a),
            delta: delta as u64,
        })
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn lo(&self) -> u64 {
        self.x
    }

    pub fn hi(&self) -> u64 {
        self.x + self.delta
    }

    /// Number of integers in the interval.
    pub fn len(&self) -> u64 {
        self.delta + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: u64) -> bool {
        (self.lo()..=self.hi()).contains(&n)
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.lo()..=self.hi()
    }
}
