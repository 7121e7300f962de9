use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn primegap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primegap"))
        .args(args)
        .env_remove("PRIMEGAP_PROFILE")
        .output()
        .expect("spawn primegap")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn is_prime(n: u64) -> bool {
    n >= 2
        && (2..)
            .take_while(|q| q * q <= n)
            .all(|q| !n.is_multiple_of(q))
}

#[test]
fn primes_listing_and_count() {
    let out = primegap(&["primes", "1", "10"]);
    assert_eq!(stdout(&out), "2\n3\n5\n7\n");
    let out = primegap(&["primes", "1", "1000000", "--count"]);
    assert_eq!(stdout(&out).trim(), "78498");
    assert_eq!(primegap(&["primes", "10", "1"]).status.code(), Some(2));
    assert_eq!(primegap(&["primes", "ten", "1"]).status.code(), Some(2));
}

#[test]
fn admissible_verify_and_generate() {
    let ok = json_of(&primegap(&["admissible", "0,2"]));
    assert_eq!(ok["admissible"], true);
    let bad = primegap(&["admissible", "0,2,4"]);
    assert_eq!(bad.status.code(), Some(3));
    let verdict: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(verdict["witness"], 3);
    let gen = json_of(&primegap(&["admissible", "--generate", "5"]));
    assert_eq!(gen["width"], 12);
    assert_eq!(gen["tuple"], serde_json::json!([0, 2, 6, 8, 12]));
    let shifted = json_of(&primegap(&["admissible", "--normalize", "5,7,11"]));
    assert_eq!(shifted["tuple"], serde_json::json!([0, 2, 6]));
    let primes = json_of(&primegap(&[
        "admissible",
        "--generate",
        "4",
        "--method",
        "primes",
    ]));
    assert_eq!(primes["admissible"], true);
    assert_eq!(primegap(&["admissible", "4,2"]).status.code(), Some(2));
}

#[test]
fn sums_are_deterministic_across_runs_and_threads() {
    let args = [
        "sums",
        "--profile",
        "desk",
        "--x",
        "1000000",
        "--A",
        "1",
        "--tuple",
        "0,4,6,10,12,16",
    ];
    let a = primegap(&args);
    let b = primegap(&args);
    let mut threaded: Vec<&str> = args.to_vec();
    threaded.extend(["--threads", "1"]);
    let c = primegap(&threaded);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json_of(&a);
    for key in [
        "s1",
        "s2",
        "statistic",
        "s1_bound_log",
        "s2_bound_log",
        "omega_prediction_log",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["k0"], 6);
    assert_eq!(v["config"]["interval"]["delta"], 72_382);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn paper_profile_limits() {
    let out = primegap(&["sums", "--profile", "paper"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("paper profile"));
    assert_eq!(
        primegap(&["bv", "--profile", "paper"]).status.code(),
        Some(2)
    );
    assert_eq!(
        primegap(&["weights", "--profile", "paper"]).status.code(),
        Some(2)
    );
    assert_eq!(
        primegap(&["omega", "--profile", "paper", "--k0", "10"])
            .status
            .code(),
        Some(2)
    );
    let p = json_of(&primegap(&["sums", "--profile", "paper", "--predict-only"]));
    assert_eq!(p["singular_series_normalized"], true);
    assert!(p["s2_bound_log"].as_f64().unwrap().is_finite());

    let env = Command::new(env!("CARGO_BIN_EXE_primegap"))
        .args(["sums"])
        .env("PRIMEGAP_PROFILE", "paper")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
}

#[test]
fn omega_payload() {
    let v = json_of(&primegap(&["omega", "--profile", "paper"]));
    assert_eq!(v["exceeds_exp_minus_5e7"], true);
    assert!(v["mantissa"].as_f64().unwrap() >= 1.0);
    assert!(v["exponent10"].as_i64().unwrap() < -21_000_000);
    assert_eq!(v["config"]["profile"], "paper");
    // Desk parameters make the bracket negative.
    let desk = json_of(&primegap(&["omega"]));
    assert_eq!(desk["sign"], -1);
    assert_eq!(desk["exceeds_exp_minus_5e7"], false);
    let small = json_of(&primegap(&[
        "omega",
        "--profile",
        "custom",
        "--k0",
        "10",
        "--l0",
        "1",
        "--varpi",
        "1/4",
    ]));
    assert_eq!(small["sign"], 1);
}

#[test]
fn config_file_precedence() {
    let dir = std::env::temp_dir().join(format!("primegap-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.conf");
    fs::write(
        &path,
        "# small run\nprofile = custom\nx = 20000\ndelta = 500\ntuple = 0,2,6\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let v = json_of(&primegap(&["sums", "--config", p, "--x", "30000"]));
    assert_eq!(v["config"]["profile"], "custom");
    assert_eq!(v["config"]["x"], 30_000);
    assert_eq!(v["config"]["interval"]["delta"], 500);
    assert_eq!(v["config"]["tuple"], serde_json::json!([0, 2, 6]));
    fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(primegap(&["sums", "--config", p]).status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn weights_csv_and_limits() {
    let out = primegap(&["weights", "--x", "1000", "--delta", "9", "--tuple", "0,2"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,lambda"));
    assert_eq!(lines.count(), 10);
    let v = json_of(&primegap(&[
        "weights", "--x", "1000", "--delta", "9", "--tuple", "0,2", "--format", "json",
    ]));
    assert_eq!(v["values"].as_array().unwrap().len(), 10);
    assert_eq!(primegap(&["weights", "--k0", "13"]).status.code(), Some(2));
    assert_eq!(
        primegap(&["weights", "--tuple", "0,2,4"]).status.code(),
        Some(3)
    );
    assert_eq!(
        primegap(&["weights", "--delta", "40000000"]).status.code(),
        Some(4)
    );
}

/// Direct double loop over squarefree 7-smooth d < 40^2 and every class c.
fn bv_oracle(lo: u64, hi: u64, offsets: &[u64], d_cap: u64, d1: u64) -> f64 {
    let theta: Vec<(u64, f64)> = (lo..=hi)
        .filter(|&n| is_prime(n))
        .map(|p| (p, (p as f64).ln()))
        .collect();
    let total: f64 = theta.iter().map(|&(_, v)| v).sum();
    let gcd = |mut a: u64, mut b: u64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    (0..offsets.len())
        .map(|i| {
            let mut acc = 0.0;
            for d in 1..d_cap {
                let smooth_sqfree = (2..=d)
                    .filter(|&p| d % p == 0 && is_prime(p))
                    .all(|p| p <= d1 && d % (p * p) != 0);
                if !smooth_sqfree {
                    continue;
                }
                let phi = (1..=d).filter(|&c| gcd(c, d) == 1).count() as f64;
                for c in (1..=d).filter(|&c| gcd(c, d) == 1) {
                    let root = offsets
                        .iter()
                        .fold(1u64, |a, &h| a * ((c + d * 100 + h - offsets[i]) % d) % d)
                        == 0;
                    if root {
                        let class: f64 = theta
                            .iter()
                            .filter(|&&(p, _)| p % d == c % d)
                            .map(|&(_, v)| v)
                            .sum();
                        acc += (class - total / phi).abs();
                    }
                }
            }
            acc
        })
        .fold(0.0, f64::max)
}

#[test]
fn bv_matches_double_loop() {
    let args = [
        "bv", "--x", "10000", "--delta", "10000", "--tuple", "0,2,6", "--D", "40", "--D1", "7",
    ];
    let v = json_of(&primegap(&args));
    let oracle = bv_oracle(10_000, 20_000, &[0, 2, 6], 1600, 7);
    let got = v["bv_sum"].as_f64().unwrap();
    assert!((got - oracle).abs() <= 1e-9 * oracle, "{got} vs {oracle}");
    let e = v["e_terms"].as_array().unwrap();
    let rhs = v["cauchy_rhs"].as_array().unwrap();
    for (e, r) in e.iter().zip(rhs) {
        assert!(e.as_f64().unwrap() <= r.as_f64().unwrap() * (1.0 + 1e-12));
    }

    let capped = json_of(&primegap(&["bv", "--d-cap", "1000"]));
    assert_eq!(capped["d_cap"], 1000);
    let csv = primegap(&["bv", "--d-cap", "1000", "--csv"]);
    assert!(stdout(&csv).starts_with("d,c,delta\n"));
    assert_eq!(
        primegap(&["bv", "--d-cap", "100000000"]).status.code(),
        Some(2)
    );
}

#[test]
fn in_process_runner() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = primegap_cli::run(["primegap", "primes", "90", "100"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), "97\n");
    let mut out = Vec::new();
    assert_eq!(
        primegap_cli::run(["primegap", "--help"], &mut out, &mut err),
        0
    );
    assert_eq!(
        primegap_cli::run(["primegap", "frobnicate"], &mut out, &mut err),
        2
    );
}
