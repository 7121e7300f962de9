//! Library side of the `primegap` binary: argument parsing, configuration and
//! the subcommands. [`run`] is what `main` calls; tests drive it directly.

pub mod config;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use primegap::admissible::{greedy_narrow, is_admissible, prime_tuple_construct};
use primegap::equidistribution::{discrepancy_report, DiscrepancyOptions};
use primegap::logreal::{default_kappa1, default_kappa2};
use primegap::sums::{
    bound_predictions, lemma3_statistic_with, predictions_json, PredictionInputs,
    PredictionOptions, S1Length,
};
use primegap::weights::{lambda_batch, lambda_sup_report, EvalConfig};
use primegap::{
    omega_constant, render_decimal, sieve_primes, verify_omega_threshold, LogReal, OmegaParams,
    Sign,
};
use serde_json::{json, Value};
use thiserror::Error;

use config::{
    default_search_width, parse_varpi, Layer, Profile, RunConfig, TupleSource, PROFILE_ENV,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// ln ω must exceed this for `exceeds_exp_minus_5e7`.
const OMEGA_LN_THRESHOLD: f64 = -5.0e7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] primegap::Error),
    #[error("output failed: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(primegap::Error::InvalidInput(_)) => EXIT_USAGE,
            CliError::Core(primegap::Error::DivisionByZero) => EXIT_USAGE,
            CliError::Core(primegap::Error::Inadmissible { .. }) => EXIT_VERDICT,
            CliError::Core(primegap::Error::Resource { .. }) => EXIT_RESOURCE,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "primegap",
    version,
    about = "Prime gap sieve experiments in short intervals"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Parameter profile [env: PRIMEGAP_PROFILE]
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,
    /// Flat key=value file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub k0: Option<usize>,
    #[arg(long, global = true)]
    pub l0: Option<usize>,
    /// Rational level parameter, e.g. 1/8
    #[arg(long, global = true, value_parser = parse_varpi)]
    pub varpi: Option<Ratio<u64>>,
    /// Left endpoint of the interval
    #[arg(long, global = true)]
    pub x: Option<u64>,
    /// Interval length x / (ln x)^A
    #[arg(long = "A", global = true, conflicts_with = "delta")]
    pub a: Option<f64>,
    /// Explicit interval length
    #[arg(long, global = true)]
    pub delta: Option<u64>,
    /// Comma-separated canonical offsets
    #[arg(long, global = true, conflicts_with = "tuple_file")]
    pub tuple: Option<String>,
    #[arg(long, global = true)]
    pub tuple_file: Option<PathBuf>,
    /// Override the sieve level D
    #[arg(long = "D", global = true)]
    pub d: Option<u64>,
    /// Override the smoothness level D1
    #[arg(long = "D1", global = true)]
    pub d1: Option<u64>,
}

impl CommonArgs {
    fn layer(&self) -> Layer {
        Layer {
            profile: self.profile,
            k0: self.k0,
            l0: self.l0,
            varpi: self.varpi,
            x: self.x,
            a: self.a,
            delta: self.delta,
            tuple: match (&self.tuple, &self.tuple_file) {
                (Some(t), _) => Some(TupleSource::Inline(t.clone())),
                (None, Some(p)) => Some(TupleSource::File(p.clone())),
                (None, None) => None,
            },
            d: self.d,
            d1: self.d1,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Greedy residue sieving over growing windows
    Greedy,
    /// Consecutive primes past the first m
    Primes,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List primes in [lo, hi]
    Primes {
        lo: u64,
        hi: u64,
        /// Print only the number of primes
        #[arg(long)]
        count: bool,
    },
    /// Check a tuple for admissibility, or generate one
    Admissible {
        /// Comma-separated offsets to verify
        #[arg(required_unless_present = "generate", conflicts_with = "generate")]
        offsets: Option<String>,
        /// Build an admissible tuple with this many offsets
        #[arg(long)]
        generate: Option<usize>,
        #[arg(long, value_enum, default_value = "greedy")]
        method: Method,
        /// Largest window for the greedy search
        #[arg(long)]
        search_width: Option<u64>,
        /// Start index m for the consecutive-primes method
        #[arg(long, default_value_t = 0)]
        skip: usize,
        /// Shift the offsets so the first is zero
        #[arg(long)]
        normalize: bool,
    },
    /// Tabulate the sieve weight over the interval
    Weights {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Exponent for the sup-norm envelope in JSON output
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
    },
    /// Compute S1, S2 and the main-term predictions
    Sums {
        /// Use x instead of the interval length in the S1 prediction
        #[arg(long)]
        strict_paper_x: bool,
        /// Skip the sums and print predictions only
        #[arg(long)]
        predict_only: bool,
        /// Truncation point of the singular series
        #[arg(long, default_value_t = primegap::sums::DEFAULT_SINGULAR_SERIES_PMAX)]
        pmax: u64,
    },
    /// Residue-class discrepancies summed over smooth moduli
    Bv {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Shorthand for --format csv
        #[arg(long)]
        csv: bool,
        /// Exclusive bound on the moduli (default D^2)
        #[arg(long)]
        d_cap: Option<u64>,
        /// Exponent B in the reference size delta (ln x)^-B
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
    },
    /// The constant omega in log space
    Omega {
        /// Natural log of kappa1 (default -1200)
        #[arg(long, allow_hyphen_values = true)]
        ln_kappa1: Option<f64>,
        /// Natural log of kappa2 (default ln(1e8) - 1200)
        #[arg(long, allow_hyphen_values = true)]
        ln_kappa2: Option<f64>,
    },
}

/// Parses `args`, runs the command and returns the exit code. Payloads go to
/// `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.common.threads {
            if n == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?
    };
    let mut buf = Vec::new();
    let code = pool.install(|| dispatch(cli, &mut buf))?;
    out.write_all(&buf)?;
    out.flush()?;
    Ok(code)
}

fn resolve(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => Layer::from_config_file(p)?,
        None => Layer::default(),
    };
    let env = std::env::var(PROFILE_ENV).ok();
    RunConfig::resolve(&common.layer(), &file, env.as_deref())
}

fn emit_json(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn with_config(mut payload: Value, cfg: &RunConfig) -> Value {
    payload
        .as_object_mut()
        .expect("payload is an object")
        .insert("config".into(), cfg.echo());
    payload
}

fn reject_paper(cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    if cfg.profile == Profile::Paper {
        return Err(CliError::Usage(format!(
            "`{command}` evaluates sums directly and is not available under the paper profile \
             (allowed: omega, sums --predict-only)"
        )));
    }
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Primes { lo, hi, count } => cmd_primes(*lo, *hi, *count, out),
        Command::Admissible {
            offsets,
            generate,
            method,
            search_width,
            skip,
            normalize,
        } => match generate {
            Some(k) => cmd_generate(*k, *method, *search_width, *skip, out),
            None => cmd_verify(offsets.as_deref().unwrap_or(""), *normalize, out),
        },
        Command::Weights { format, epsilon } => {
            let cfg = resolve(&cli.common)?;
            reject_paper(&cfg, "weights")?;
            cmd_weights(&cfg, *format, *epsilon, out)
        }
        Command::Sums {
            strict_paper_x,
            predict_only,
            pmax,
        } => {
            let cfg = resolve(&cli.common)?;
            if !predict_only {
                reject_paper(&cfg, "sums")?;
            }
            cmd_sums(&cfg, *strict_paper_x, *predict_only, *pmax, out)
        }
        Command::Bv {
            format,
            csv,
            d_cap,
            b,
        } => {
            let cfg = resolve(&cli.common)?;
            reject_paper(&cfg, "bv")?;
            let format = if *csv { Format::Csv } else { *format };
            cmd_bv(&cfg, format, *d_cap, *b, out)
        }
        Command::Omega {
            ln_kappa1,
            ln_kappa2,
        } => {
            let cfg = resolve(&cli.common)?;
            cmd_omega(&cfg, *ln_kappa1, *ln_kappa2, out)
        }
    }
}

fn cmd_primes(lo: u64, hi: u64, count: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let table = sieve_primes(lo, hi)?;
    if count {
        writeln!(out, "{}", table.len())?;
    } else {
        for p in table.iter() {
            writeln!(out, "{p}")?;
        }
    }
    Ok(EXIT_OK)
}

fn parse_offsets(text: &str) -> Result<Vec<u64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| CliError::Usage(format!("bad offset {s:?}: {e}")))
        })
        .collect()
}

fn cmd_verify(text: &str, normalize: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut offsets = parse_offsets(text)?;
    if offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "offsets must be strictly increasing".into(),
        ));
    }
    if normalize {
        let first = offsets[0];
        offsets.iter_mut().for_each(|h| *h -= first);
    }
    let verdict = is_admissible(&offsets)?;
    emit_json(
        out,
        &json!({
            "admissible": verdict.admissible,
            "witness": verdict.witness,
            "tuple": offsets,
            "k": offsets.len(),
            "width": offsets[offsets.len() - 1] - offsets[0],
        }),
    )?;
    Ok(if verdict.admissible {
        EXIT_OK
    } else {
        EXIT_VERDICT
    })
}

fn cmd_generate(
    k: usize,
    method: Method,
    search_width: Option<u64>,
    skip: usize,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let (tuple, extra) = match method {
        Method::Greedy => {
            let w = search_width.unwrap_or_else(|| default_search_width(k));
            (
                greedy_narrow(k, w)?,
                json!({ "method": "greedy", "search_width": w }),
            )
        }
        Method::Primes => {
            let built = prime_tuple_construct(k, skip, true)?;
            (built.tuple, json!({ "method": "primes", "m": built.m }))
        }
    };
    let mut payload = json!({
        "admissible": true,
        "tuple": tuple.offsets(),
        "k": tuple.k(),
        "width": tuple.width(),
    });
    payload
        .as_object_mut()
        .expect("object")
        .extend(extra.as_object().expect("object").clone());
    emit_json(out, &payload)?;
    Ok(EXIT_OK)
}

fn cmd_weights(
    cfg: &RunConfig,
    format: Format,
    epsilon: f64,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let tuple = cfg.require_tuple("weights")?;
    let params = cfg.params()?;
    let table = lambda_batch(&cfg.interval, tuple, &params, &EvalConfig::default())?;
    match format {
        Format::Csv => {
            table.write_csv(out)?;
        }
        Format::Json => {
            let sup = lambda_sup_report(&table, &params, epsilon)?;
            let values: Vec<Value> = table.iter().map(|(n, v)| json!([n, v])).collect();
            let payload = json!({
                "max_abs": table.max_abs,
                "sup_envelope": sup.bound,
                "sup_within_envelope": sup.ok,
                "epsilon": epsilon,
                "values": values,
            });
            emit_json(out, &with_config(payload, cfg))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_sums(
    cfg: &RunConfig,
    strict_paper_x: bool,
    predict_only: bool,
    pmax: u64,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let opts = PredictionOptions {
        s1_length: if strict_paper_x {
            S1Length::StrictPaperX
        } else {
            S1Length::Delta
        },
        singular_series_pmax: pmax,
        ..PredictionOptions::default()
    };
    let params = cfg.params()?;
    if predict_only {
        // No tuple of the published size is available, so the singular
        // series is normalised to 1 there.
        let (series, normalized) = match &cfg.tuple {
            Some(t) => (t.singular_series(pmax.max(t.k() as u64))?.value, false),
            None => (1.0, true),
        };
        let predictions = bound_predictions(
            &PredictionInputs {
                k0: params.k0 as u64,
                l0: params.l0 as u64,
                varpi: params.varpi,
                ln_d: params.ln_d(),
                x: cfg.interval.x,
                delta: cfg.interval.delta(),
                ln_singular_series: series.ln(),
            },
            &opts,
        )?;
        let mut payload = predictions_json(&predictions);
        let obj = payload.as_object_mut().expect("object");
        obj.insert("singular_series".into(), json!(series));
        obj.insert("singular_series_normalized".into(), json!(normalized));
        obj.insert("s1_length".into(), json!(opts.s1_length));
        emit_json(out, &with_config(payload, cfg))?;
        return Ok(EXIT_OK);
    }
    let tuple = cfg.require_tuple("sums")?;
    let report =
        lemma3_statistic_with(&cfg.interval, tuple, &params, &opts, &EvalConfig::default())?;
    let mut payload = report.to_json();
    payload
        .as_object_mut()
        .expect("object")
        .insert("s1_length".into(), json!(opts.s1_length));
    emit_json(out, &with_config(payload, cfg))?;
    Ok(EXIT_OK)
}

fn cmd_bv(
    cfg: &RunConfig,
    format: Format,
    d_cap: Option<u64>,
    b: f64,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let tuple = cfg.require_tuple("bv")?;
    let params = cfg.params()?;
    let opts = DiscrepancyOptions {
        d_cap,
        b_exponent: b,
        ..DiscrepancyOptions::default()
    };
    let report = discrepancy_report(&cfg.interval, tuple, &params, &opts)?;
    match format {
        Format::Csv => {
            report.write_csv(out)?;
        }
        Format::Json => {
            let mut payload = report.summary_json();
            payload
                .as_object_mut()
                .expect("object")
                .insert("bv_sum_over_delta".into(), json!(report.relative_bv()));
            emit_json(out, &with_config(payload, cfg))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_omega(
    cfg: &RunConfig,
    ln_kappa1: Option<f64>,
    ln_kappa2: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let kappa1 = ln_kappa1
        .map(LogReal::from_ln)
        .unwrap_or_else(default_kappa1);
    let kappa2 = ln_kappa2
        .map(LogReal::from_ln)
        .unwrap_or_else(default_kappa2);
    let params = OmegaParams {
        k0: cfg.k0 as u64,
        l0: cfg.l0 as u64,
        varpi: cfg.varpi,
        kappa1,
        kappa2,
    };
    let omega = omega_constant(&params)?;
    let (mantissa, exponent) = if omega.is_zero() {
        (0.0, 0)
    } else {
        let d = render_decimal(omega)?;
        let m = (d.mantissa * 1000.0).round() / 1000.0;
        if m.abs() >= 10.0 {
            (m / 10.0, d.exponent + 1)
        } else {
            (m, d.exponent)
        }
    };
    let exceeds =
        omega.sign() == Sign::Positive && verify_omega_threshold(omega, OMEGA_LN_THRESHOLD)?;
    let payload = json!({
        "mantissa": mantissa,
        "exponent10": exponent,
        "ln_value": if omega.is_zero() { Value::Null } else { json!(omega.ln_abs()) },
        "sign": omega.sign() as i8,
        "exceeds_exp_minus_5e7": exceeds,
        "ln_kappa1": kappa1.ln_abs(),
        "ln_kappa2": kappa2.ln_abs(),
    });
    emit_json(out, &with_config(payload, cfg))?;
    Ok(EXIT_OK)
}
