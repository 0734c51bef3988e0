//! Churn ratio, replacement count and the core miss probability.
//!
//! A core of `q` nodes is placed at time 0. After `delta` time units, each
//! of which replaces a fraction `c` of the `n` current nodes, a fraction
//! `C = 1 - (1 - c)^delta` of the initial nodes is gone, i.e.
//! `alpha = ⌈C·n⌉` nodes. A querier then probes `q` distinct nodes uniformly.
//! The probability `epsilon` that no probe lands on a surviving core member is
//!
//! ```text
//!            Σ_{k=a..b} C(n-q+k, q) · C(q, k) · C(n-q, alpha-k)
//! epsilon = ----------------------------------------------------
//!                        C(n, q) · C(n, alpha)
//! ```
//!
//! with `a = max(0, alpha - n + q)` and `b = min(alpha, q)`. The summand
//! splits into the hypergeometric law of the number `k` of replaced core
//! members and the conditional miss probability given `k`.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial_exact, binomial_rational, ln_binomial, ln_rational, log_sum_exp, ExactRational,
    LogReal,
};
use crate::error::{Error, Result};
use crate::fraction::to_scalar;
use crate::scalar::Scalar;

/// Largest population for which [`NumericMode::auto`] picks the exact path.
pub const EXACT_MODE_MAX_N: u64 = 2000;

/// Static description of the dynamic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<S> {
    /// Population, constant over time.
    pub n: u64,
    /// Fraction of the population replaced per time unit, in `[0, 1)`.
    pub c: S,
    /// Observation span in whole time units.
    pub delta: u64,
}

impl<S: Scalar> SystemParams<S> {
    pub fn new(n: u64, c: S, delta: u64) -> Result<Self> {
        check_population(n)?;
        check_rate(c)?;
        Ok(SystemParams { n, c, delta })
    }

    pub fn churn(&self) -> Result<ChurnOutcome<S>> {
        let ratio = churn_ratio(self.c, self.delta)?;
        let alpha = replaced_count(self.n, ratio)?;
        Ok(ChurnOutcome { ratio, alpha })
    }
}

/// Derived dynamism over the observation span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChurnOutcome<S> {
    /// Fraction of the initial nodes replaced.
    pub ratio: S,
    /// `⌈ratio · n⌉`.
    pub alpha: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    /// Reduced big rationals, no rounding anywhere.
    Exact,
    /// Log-space floating point with log-sum-exp accumulation.
    LogSpace,
}

impl NumericMode {
    /// Exact up to [`EXACT_MODE_MAX_N`] nodes, log-space above.
    pub fn auto(n: u64) -> Self {
        if n <= EXACT_MODE_MAX_N {
            NumericMode::Exact
        } else {
            NumericMode::LogSpace
        }
    }
}

/// Core/probe size and the arithmetic used to evaluate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuery {
    pub q: u64,
    pub mode: NumericMode,
}

/// The miss probability `epsilon`; `p_hit = 1 - epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub enum MissProbability<S> {
    Exact(ExactRational),
    LogSpace(LogReal<S>),
}

impl<S: Scalar> MissProbability<S> {
    pub fn mode(&self) -> NumericMode {
        match self {
            MissProbability::Exact(_) => NumericMode::Exact,
            MissProbability::LogSpace(_) => NumericMode::LogSpace,
        }
    }

    pub fn epsilon(&self) -> S {
        match self {
            MissProbability::Exact(r) => match to_scalar::<S>(r) {
                // below the normal range; go through the logarithm instead
                v if v == S::zero() && !r.is_zero() => S::lit(ln_rational(r).value()),
                v => v,
            },
            MissProbability::LogSpace(l) => l.value(),
        }
    }

    pub fn p_hit(&self) -> S {
        match self {
            MissProbability::Exact(r) => to_scalar(&(ExactRational::one() - r)),
            MissProbability::LogSpace(l) => l.complement(),
        }
    }

    pub fn ln_epsilon(&self) -> S {
        match self {
            MissProbability::Exact(r) => S::lit(ln_rational(r).ln()),
            MissProbability::LogSpace(l) => l.ln(),
        }
    }

    pub fn exact(&self) -> Option<&ExactRational> {
        match self {
            MissProbability::Exact(r) => Some(r),
            MissProbability::LogSpace(_) => None,
        }
    }

    /// `1 - epsilon` as an exact rational, in exact mode.
    pub fn p_hit_exact(&self) -> Option<ExactRational> {
        self.exact().map(|r| ExactRational::one() - r)
    }

    /// `epsilon <= bound`, compared exactly in exact mode and in log space
    /// otherwise.
    pub fn at_most(&self, bound: &ExactRational) -> bool {
        match self {
            MissProbability::Exact(r) => r <= bound,
            MissProbability::LogSpace(l) => {
                if l.is_zero() {
                    return true;
                }
                let ln_bound = ln_rational(bound);
                !ln_bound.is_zero() && l.ln() <= S::lit(ln_bound.ln())
            }
        }
    }
}

fn check_population(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n", n, "[1, inf)"));
    }
    Ok(())
}

pub(crate) fn check_rate<S: Scalar>(c: S) -> Result<()> {
    if !(c >= S::zero() && c < S::one()) {
        return Err(Error::domain("c", c, "[0, 1)"));
    }
    Ok(())
}

fn check_sizes(n: u64, alpha: u64, q: u64) -> Result<()> {
    check_population(n)?;
    if q > n {
        return Err(Error::domain("q", q, "[0, n]"));
    }
    if alpha > n {
        return Err(Error::domain("alpha", alpha, "[0, n]"));
    }
    Ok(())
}

/// Fraction of the initial nodes replaced after `delta` units at per-unit
/// rate `c`: `1 - (1 - c)^delta`, formed as `-expm1(delta · ln1p(-c))`.
pub fn churn_ratio<S: Scalar>(c: S, delta: u64) -> Result<S> {
    check_rate(c)?;
    if delta == 0 || c == S::zero() {
        return Ok(S::zero());
    }
    Ok(-(S::count(delta) * (-c).ln_1p()).exp_m1())
}

/// `⌈ratio · n⌉`, clamped to `[0, n]`.
pub fn replaced_count<S: Scalar>(n: u64, ratio: S) -> Result<u64> {
    if !(ratio >= S::zero() && ratio <= S::one()) {
        return Err(Error::domain("C", ratio, "[0, 1]"));
    }
    let scaled = (ratio * S::count(n)).ceil();
    Ok(scaled.to_u64().unwrap_or(n).min(n))
}

/// `⌈ratio · n⌉` for an exactly known ratio; no rounding is involved.
pub fn replaced_count_exact(n: u64, ratio: &ExactRational) -> Result<u64> {
    if *ratio < ExactRational::zero() || *ratio > ExactRational::one() {
        return Err(Error::domain("C", ratio, "[0, 1]"));
    }
    let scaled = (ratio * BigInt::from(n)).ceil();
    Ok(scaled.to_integer().to_u64().unwrap_or(n).min(n))
}

/// Support `a..=b` of the number of replaced core members.
pub fn support(n: u64, q: u64, alpha: u64) -> RangeInclusive<u64> {
    let lo = (alpha + q).saturating_sub(n);
    let hi = alpha.min(q);
    lo..=hi
}

fn check_support(n: u64, q: u64, alpha: u64, k: u64) -> Result<()> {
    check_sizes(n, alpha, q)?;
    if !support(n, q, alpha).contains(&k) {
        return Err(Error::domain("k", k, "[max(0, alpha-n+q), min(alpha, q)]"));
    }
    Ok(())
}

/// `P[k replaced core members] = C(q, k) C(n-q, alpha-k) / C(n, alpha)`.
pub fn hypergeometric_pmf_exact(n: u64, q: u64, alpha: u64, k: u64) -> Result<ExactRational> {
    check_support(n, q, alpha, k)?;
    Ok(ExactRational::new(
        BigInt::from(binomial_exact(q, k as i64) * binomial_exact(n - q, (alpha - k) as i64)),
        BigInt::from(binomial_exact(n, alpha as i64)),
    ))
}

/// Log-space form of [`hypergeometric_pmf_exact`].
pub fn hypergeometric_pmf<S: Scalar>(n: u64, q: u64, alpha: u64, k: u64) -> Result<LogReal<S>> {
    check_support(n, q, alpha, k)?;
    Ok(
        ln_binomial::<S>(q, k as i64) * ln_binomial(n - q, (alpha - k) as i64)
            / ln_binomial(n, alpha as i64),
    )
}

fn check_conditional(n: u64, q: u64, k: u64) -> Result<()> {
    check_population(n)?;
    if q > n {
        return Err(Error::domain("q", q, "[0, n]"));
    }
    if k > q {
        return Err(Error::domain("k", k, "[0, q]"));
    }
    Ok(())
}

/// Probability that `q` distinct uniform probes all avoid the `q - k` core
/// members still present: `C(n-q+k, q) / C(n, q)`.
pub fn conditional_miss_exact(n: u64, q: u64, k: u64) -> Result<ExactRational> {
    check_conditional(n, q, k)?;
    Ok(binomial_rational(n - q + k, q as i64) / binomial_rational(n, q as i64))
}

/// Log-space form of [`conditional_miss_exact`].
pub fn conditional_miss<S: Scalar>(n: u64, q: u64, k: u64) -> Result<LogReal<S>> {
    check_conditional(n, q, k)?;
    Ok(ln_binomial::<S>(n - q + k, q as i64) / ln_binomial(n, q as i64))
}

/// The sequential-draw form `Π_{i=1..q} (1 - (q-k)/(n-i+1))`, exactly.
pub fn conditional_miss_product_exact(n: u64, q: u64, k: u64) -> Result<ExactRational> {
    check_conditional(n, q, k)?;
    let present = BigInt::from(q - k);
    Ok((1..=q)
        .map(|i| {
            let remaining = BigInt::from(n - i + 1);
            ExactRational::new(&remaining - &present, remaining)
        })
        .fold(ExactRational::one(), |acc, f| acc * f))
}

/// The sequential-draw form in floating point.
pub fn conditional_miss_product<S: Scalar>(n: u64, q: u64, k: u64) -> Result<S> {
    check_conditional(n, q, k)?;
    let present = S::count(q - k);
    Ok((1..=q).fold(S::one(), |acc, i| {
        acc * (S::one() - present / S::count(n - i + 1))
    }))
}

/// Miss probability as an exact reduced rational.
///
/// Summands are carried as integers and advanced from `k` to `k + 1` by
/// exact small-integer ratios, so the cost is linear in the support size.
pub fn miss_probability_exact(n: u64, alpha: u64, q: u64) -> Result<ExactRational> {
    check_sizes(n, alpha, q)?;
    let range = support(n, q, alpha);
    // C(n-q+k, q) vanishes while n - q + k < q
    let first = (*range.start()).max((2 * q).saturating_sub(n));
    let last = *range.end();
    let denominator = binomial_exact(n, q as i64) * binomial_exact(n, alpha as i64);
    if first > last {
        return Ok(ExactRational::zero());
    }

    let mut probe = binomial_exact(n - q + first, q as i64);
    let mut core = binomial_exact(q, first as i64);
    let mut rest = binomial_exact(n - q, (alpha - first) as i64);
    let mut total = BigUint::zero();
    for k in first..=last {
        total += &probe * &core * &rest;
        if k == last {
            break;
        }
        probe = probe * (n - q + k + 1) / (n + k + 1 - 2 * q);
        core = core * (q - k) / (k + 1);
        rest = rest * (alpha - k) / (n + k + 1 - q - alpha);
    }
    Ok(ExactRational::new(
        BigInt::from(total),
        BigInt::from(denominator),
    ))
}

/// Miss probability in log space.
pub fn miss_probability_log<S: Scalar>(n: u64, alpha: u64, q: u64) -> Result<LogReal<S>> {
    check_sizes(n, alpha, q)?;
    let terms = support(n, q, alpha).map(|k| {
        ln_binomial::<S>(n - q + k, q as i64)
            * ln_binomial(q, k as i64)
            * ln_binomial(n - q, (alpha - k) as i64)
    });
    let sum = log_sum_exp(terms);
    let eps = sum / (ln_binomial(n, q as i64) * ln_binomial(n, alpha as i64));
    // rounding may push a certain miss a hair above one
    if eps.ln() > S::zero() {
        return Ok(LogReal::one());
    }
    Ok(eps)
}

/// Miss probability for `q` probes after `alpha` replacements.
pub fn miss_probability<S: Scalar>(
    n: u64,
    alpha: u64,
    q: u64,
    mode: NumericMode,
) -> Result<MissProbability<S>> {
    match mode {
        NumericMode::Exact => miss_probability_exact(n, alpha, q).map(MissProbability::Exact),
        NumericMode::LogSpace => miss_probability_log(n, alpha, q).map(MissProbability::LogSpace),
    }
}

/// Miss probability with `alpha` derived from the churn parameters.
pub fn miss_probability_for<S: Scalar>(
    params: &SystemParams<S>,
    query: ProbeQuery,
) -> Result<MissProbability<S>> {
    let outcome = params.churn()?;
    miss_probability(params.n, outcome.alpha, query.q, query.mode)
}
