//! Run configuration: profile defaults, an optional key=value file and
//! command-line flags, merged in that order of increasing priority.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use num_rational::Ratio;
use primegap::{greedy_narrow, AdmissibleTuple, IntervalSpec, SieveParams};
use serde_json::{json, Value};

use crate::CliError;

pub const PROFILE_ENV: &str = "PRIMEGAP_PROFILE";

/// Largest tuple size the desk profile accepts.
pub const DESK_MAX_K0: usize = 12;

const PAPER_K0: usize = 3_500_000;
const PAPER_L0: usize = 180;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Published parameters; only omega and predictions.
    Paper,
    /// Small parameters suited to direct evaluation.
    Desk,
    /// Desk defaults without the k0 cap.
    Custom,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
            Profile::Custom => "custom",
        }
    }
}

impl FromStr for Profile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Profile as ValueEnum>::from_str(s.trim(), true).map_err(|_| {
            CliError::Usage(format!(
                "unknown profile {s:?} (expected paper, desk or custom)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TupleSource {
    Inline(String),
    File(PathBuf),
}

impl TupleSource {
    fn load(&self) -> Result<AdmissibleTuple, CliError> {
        let text = match self {
            TupleSource::Inline(s) => s.clone(),
            TupleSource::File(p) => read_text(p)?,
        };
        let joined = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(",");
        Ok(AdmissibleTuple::parse(&joined, false)?)
    }

    fn describe(&self) -> String {
        match self {
            TupleSource::Inline(s) => s.clone(),
            TupleSource::File(p) => p.display().to_string(),
        }
    }
}

/// One source of settings. Unset fields fall through to lower layers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    pub profile: Option<Profile>,
    pub k0: Option<usize>,
    pub l0: Option<usize>,
    pub varpi: Option<Ratio<u64>>,
    pub x: Option<u64>,
    pub a: Option<f64>,
    pub delta: Option<u64>,
    pub tuple: Option<TupleSource>,
    pub d: Option<u64>,
    pub d1: Option<u64>,
    pub seed: Option<u64>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("bad value for {key}: {value:?} ({e})")))
}

pub fn parse_varpi(text: &str) -> Result<Ratio<u64>, String> {
    Ratio::<u64>::from_str(text.trim()).map_err(|e| format!("expected a fraction like 1/8: {e}"))
}

impl Layer {
    /// Parses a flat `key = value` file. `#` starts a comment.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        let mut layer = Layer::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "profile" => layer.profile = Some(value.parse()?),
                "k0" => layer.k0 = Some(parse_value(key, value)?),
                "l0" => layer.l0 = Some(parse_value(key, value)?),
                "varpi" => layer.varpi = Some(parse_varpi(value).map_err(CliError::Usage)?),
                "x" => layer.x = Some(parse_value(key, value)?),
                "A" => layer.a = Some(parse_value(key, value)?),
                "delta" => layer.delta = Some(parse_value(key, value)?),
                "tuple" => layer.tuple = Some(TupleSource::Inline(value.to_string())),
                "tuple_file" => layer.tuple = Some(TupleSource::File(value.into())),
                "D" => layer.d = Some(parse_value(key, value)?),
                "D1" => layer.d1 = Some(parse_value(key, value)?),
                "seed" => layer.seed = Some(parse_value(key, value)?),
                _ => {
                    return Err(CliError::Usage(format!(
                        "config line {}: unknown key {key:?}",
                        lineno + 1
                    )))
                }
            }
            if layer.a.is_some() && layer.delta.is_some() {
                return Err(CliError::Usage("config sets both A and delta".into()));
            }
        }
        Ok(layer)
    }

    pub fn from_config_file(path: &Path) -> Result<Self, CliError> {
        Self::from_config_text(&read_text(path)?)
    }

    /// `self` wins wherever it is set. A length given either way replaces
    /// the whole interval mode of the lower layer.
    fn over(&self, lower: &Layer) -> Layer {
        let interval_set = self.a.is_some() || self.delta.is_some();
        Layer {
            profile: self.profile.or(lower.profile),
            k0: self.k0.or(lower.k0),
            l0: self.l0.or(lower.l0),
            varpi: self.varpi.or(lower.varpi),
            x: self.x.or(lower.x),
            a: if interval_set { self.a } else { lower.a },
            delta: if interval_set {
                self.delta
            } else {
                lower.delta
            },
            tuple: self.tuple.clone().or_else(|| lower.tuple.clone()),
            d: self.d.or(lower.d),
            d1: self.d1.or(lower.d1),
            seed: self.seed.or(lower.seed),
        }
    }
}

fn profile_defaults(profile: Profile) -> Layer {
    let mut layer = Layer {
        profile: Some(profile),
        l0: Some(1),
        varpi: Some(Ratio::new(1, 8)),
        x: Some(1_000_000),
        a: Some(1.0),
        seed: Some(0),
        ..Layer::default()
    };
    if profile == Profile::Paper {
        layer.k0 = Some(PAPER_K0);
        layer.l0 = Some(PAPER_L0);
        layer.varpi = Some(Ratio::new(1, 1168));
    } else {
        layer.k0 = Some(6);
    }
    layer
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: Profile,
    pub k0: usize,
    pub l0: usize,
    pub varpi: Ratio<u64>,
    pub interval: IntervalSpec,
    /// `None` under the paper profile, where no tuple of that size exists here.
    pub tuple: Option<AdmissibleTuple>,
    tuple_source: Option<String>,
    levels: Option<(u64, u64)>,
    pub seed: u64,
}

impl RunConfig {
    /// Merges `flags` over `file` over the profile defaults. The profile is
    /// taken from the flags, then the file, then `env_profile`, then desk.
    pub fn resolve(
        flags: &Layer,
        file: &Layer,
        env_profile: Option<&str>,
    ) -> Result<Self, CliError> {
        let profile = match flags.profile.or(file.profile) {
            Some(p) => p,
            None => match env_profile.filter(|s| !s.trim().is_empty()) {
                Some(s) => s.parse()?,
                None => Profile::Desk,
            },
        };
        let user = flags.over(file);
        let merged = user.over(&profile_defaults(profile));
        let k0 = merged.k0.expect("profile default");
        let l0 = merged.l0.expect("profile default");
        let varpi = merged.varpi.expect("profile default");
        let x = merged.x.expect("profile default");
        let interval = match (merged.a, merged.delta) {
            (_, Some(delta)) => IntervalSpec::explicit(x, delta)?,
            (Some(a), None) => IntervalSpec::log_power(x, a)?,
            (None, None) => unreachable!("profile sets A"),
        };
        let levels = match (merged.d, merged.d1) {
            (None, None) => None,
            (d, d1) => {
                let base = SieveParams::new(k0, l0, varpi, x)?;
                Some((d.unwrap_or(base.d), d1.unwrap_or(base.d1)))
            }
        };

        let (tuple, k0) = match profile {
            Profile::Paper => {
                if user.k0.is_some_and(|k| k != PAPER_K0)
                    || user.l0.is_some_and(|l| l != PAPER_L0)
                    || user.varpi.is_some_and(|v| v != Ratio::new(1, 1168))
                {
                    return Err(CliError::Usage(
                        "the paper profile fixes k0 = 3500000, l0 = 180, varpi = 1/1168; use --profile custom".into(),
                    ));
                }
                if user.tuple.is_some() {
                    return Err(CliError::Usage(
                        "the paper profile does not take a tuple".into(),
                    ));
                }
                (None, k0)
            }
            Profile::Desk | Profile::Custom => {
                let tuple = match &user.tuple {
                    Some(src) => src.load()?,
                    None => greedy_narrow(k0, default_search_width(k0))?,
                };
                if let Some(k) = user.k0 {
                    if user.tuple.is_some() && k != tuple.k() {
                        return Err(CliError::Usage(format!(
                            "k0 = {k} disagrees with the {}-element tuple",
                            tuple.k()
                        )));
                    }
                }
                let k0 = tuple.k();
                if profile == Profile::Desk && k0 > DESK_MAX_K0 {
                    return Err(CliError::Usage(format!(
                        "desk profile allows k0 <= {DESK_MAX_K0}, got {k0}; use --profile custom"
                    )));
                }
                (Some(tuple), k0)
            }
        };
        // Validates varpi and x even when no sieve is run.
        SieveParams::new(k0, l0, varpi, x)?;
        Ok(Self {
            profile,
            k0,
            l0,
            varpi,
            interval,
            tuple,
            tuple_source: user.tuple.as_ref().map(TupleSource::describe),
            levels,
            seed: merged.seed.unwrap_or(0),
        })
    }

    pub fn params(&self) -> Result<SieveParams, CliError> {
        let params = SieveParams::new(self.k0, self.l0, self.varpi, self.interval.x)?;
        Ok(match self.levels {
            Some((d, d1)) => params.with_levels(d, d1)?,
            None => params,
        })
    }

    /// The tuple, or a usage error naming the command that needed it.
    pub fn require_tuple(&self, command: &str) -> Result<&AdmissibleTuple, CliError> {
        self.tuple.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "`{command}` evaluates sums directly and is not available under the paper profile"
            ))
        })
    }

    /// Effective settings, echoed in every JSON payload.
    pub fn echo(&self) -> Value {
        let params = self.params().ok();
        json!({
            "profile": self.profile.name(),
            "k0": self.k0,
            "l0": self.l0,
            "varpi": format!("{}/{}", self.varpi.numer(), self.varpi.denom()),
            "x": self.interval.x,
            "interval": {
                "mode": self.interval.delta_mode,
                "lo": self.interval.lo(),
                "hi": self.interval.hi(),
                "delta": self.interval.delta(),
            },
            "D": params.as_ref().map(|p| p.d),
            "D1": params.as_ref().map(|p| p.d1),
            "tuple": self.tuple.as_ref().map(|t| t.offsets().to_vec()),
            "tuple_source": self.tuple_source,
            "seed": self.seed,
        })
    }
}

/// Widest window the greedy tuple search will try for `k` offsets.
pub fn default_search_width(k: usize) -> u64 {
    let k = k.max(2) as f64;
    (4.0 * k * k.ln().ceil()) as u64 + 64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults() {
        let c = RunConfig::resolve(&Layer::default(), &Layer::default(), None).unwrap();
        assert_eq!(c.profile, Profile::Desk);
        assert_eq!((c.k0, c.l0), (6, 1));
        assert_eq!(c.varpi, Ratio::new(1, 8));
        assert_eq!(c.interval.delta(), 72_382);
        assert_eq!(c.tuple.unwrap().offsets(), &[0, 4, 6, 10, 12, 16]);
    }

    #[test]
    fn precedence() {
        let file = Layer::from_config_text("# desk run\nx = 20000\ndelta = 100\nl0=2\n").unwrap();
        let flags = Layer {
            x: Some(30_000),
            ..Layer::default()
        };
        let c = RunConfig::resolve(&flags, &file, Some("custom")).unwrap();
        assert_eq!(c.profile, Profile::Custom);
        assert_eq!((c.interval.x, c.interval.delta(), c.l0), (30_000, 100, 2));
        let flags = Layer {
            a: Some(2.0),
            ..Layer::default()
        };
        let c = RunConfig::resolve(&flags, &file, None).unwrap();
        assert_eq!(c.interval, IntervalSpec::log_power(20_000, 2.0).unwrap());
    }

    #[test]
    fn profile_locks() {
        let env = Some("paper");
        let c = RunConfig::resolve(&Layer::default(), &Layer::default(), env).unwrap();
        assert_eq!((c.k0, c.l0), (3_500_000, 180));
        assert!(c.tuple.is_none());
        let flags = Layer {
            k0: Some(10),
            ..Layer::default()
        };
        assert!(RunConfig::resolve(&flags, &Layer::default(), env).is_err());
        let big = Layer {
            k0: Some(13),
            ..Layer::default()
        };
        assert!(RunConfig::resolve(&big, &Layer::default(), None).is_err());
        let c = RunConfig::resolve(&big, &Layer::default(), Some("custom")).unwrap();
        assert_eq!(c.tuple.unwrap().k(), 13);
    }

    #[test]
    fn config_errors() {
        assert!(Layer::from_config_text("bogus = 1").is_err());
        assert!(Layer::from_config_text("x").is_err());
        assert!(Layer::from_config_text("A = 1\ndelta = 5").is_err());
        assert!(Layer::from_config_text("varpi = 1/0").is_err());
        assert!("nonsense".parse::<Profile>().is_err());
    }

    #[test]
    fn tuple_k0_mismatch() {
        let flags = Layer {
            k0: Some(3),
            tuple: Some(TupleSource::Inline("0,2".into())),
            ..Layer::default()
        };
        assert!(RunConfig::resolve(&flags, &Layer::default(), None).is_err());
    }
}
