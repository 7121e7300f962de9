//! Computational companion to the bounded-gaps-in-short-intervals argument:
//! admissible tuples, the truncated sieve weight λ(n), the short-interval
//! sums S1 and S2, residue-class discrepancies of θ, and the constant ω in
//! log space.

pub mod admissible;
pub mod arith;
pub mod equidistribution;
pub mod error;
pub mod interval;
pub mod logreal;
pub mod summation;
pub mod sums;
pub mod weights;

pub use admissible::{
    greedy_narrow, is_admissible, prime_tuple_construct, residue_coverage, singular_series,
    Admissibility, AdmissibleTuple, PrimeTupleConstruction, SingularSeriesValue,
};
pub use arith::{
    euler_phi, factorize, is_prime, mobius, poly_p, rho2, sieve_primes, sieve_primes_with, tau3,
    theta, Factorization, PrimeTable, SieveConfig,
};
pub use equidistribution::{
    bv_sum, discrepancy_delta, discrepancy_report, error_term_ei, residue_set,
    smooth_squarefree_moduli, DiscrepancyOptions, DiscrepancyReport, Gamma, ResidueSet,
};
pub use error::{Error, Result};
pub use interval::{DeltaMode, IntervalSpec};
pub use logreal::{
    log_binomial, log_gamma, omega_constant, render_decimal, verify_omega_threshold, Decimal,
    LogReal, OmegaParams, Sign,
};
pub use sums::{
    bound_predictions, count_two_prime_translates, count_weak_prime_pairs, lemma3_statistic,
    lemma3_statistic_with, predictions_json, s1, s2, PredictionInputs, PredictionOptions, S1Length,
    SumReport,
};
pub use weights::{
    lambda_batch, lambda_sup_report, lambda_weight, weight_g, EvalConfig, LambdaSieve, SieveParams,
    WeightTable,
};
