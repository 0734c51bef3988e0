//! Persistence of replicated data under churn.
//!
//! A core of `q` nodes holds a data item at time 0 in a population of `n`
//! nodes that is partially replaced every time unit. This crate computes the
//! probability that `q` uniform probes issued later all miss the surviving
//! core, inverts that relation to size cores and probe periods, and checks
//! the analytic results with a seeded Monte Carlo simulator.
//!
//! Log-space routines are generic over [`Scalar`] (`f32`, `f64`); the exact
//! path works on [`ExactRational`]. The aliases below fix the scalar to `f64`
//! for everyday use.

pub mod combinatorics;
pub mod error;
pub mod fraction;
pub mod persistence;
pub mod scalar;
pub mod simulator;
pub mod solvers;

pub use combinatorics::{
    binomial_exact, ln_binomial, ln_factorial, ln_gamma, log_sum_exp, ExactRational, LogReal,
};
pub use error::{Error, Result};
pub use fraction::parse_fraction;
pub use persistence::{
    churn_ratio, conditional_miss, conditional_miss_exact, hypergeometric_pmf,
    hypergeometric_pmf_exact, miss_probability, miss_probability_exact, miss_probability_for,
    miss_probability_log, replaced_count, replaced_count_exact, ChurnOutcome, MissProbability,
    NumericMode, ProbeQuery, SystemParams,
};
pub use scalar::Scalar;
pub use simulator::{
    compare_with_analytic, run_churn_trials, run_urn_trials, Comparison, Model, TrialConfig,
    TrialReport,
};
pub use solvers::{
    churn_rate_for, delta_for_churn, max_delta, min_core_size, CoreSize, Lifetime, TuningTarget,
    DEFAULT_HORIZON,
};

pub type LogReal64 = LogReal<f64>;
pub type LogReal32 = LogReal<f32>;
pub type MissProbability64 = MissProbability<f64>;
pub type MissProbability32 = MissProbability<f32>;
pub type SystemParams64 = SystemParams<f64>;
pub type ChurnOutcome64 = ChurnOutcome<f64>;
pub type CoreSize64 = CoreSize<f64>;
pub type Lifetime64 = Lifetime<f64>;
