//! Inverse problems: core size for a target miss probability, probe period
//! for a churn budget, and churn rate for a tolerated ratio.
//!
//! Integer answers come with the value of the predicate on both sides of the
//! boundary, so each result can be checked without trusting the search.

use num_traits::{One, Zero};

use crate::combinatorics::ExactRational;
use crate::error::{Error, Result};
use crate::persistence::{
    check_rate, churn_ratio, miss_probability, replaced_count, MissProbability, NumericMode,
};
use crate::scalar::Scalar;

/// Search cap for [`max_delta`], in time units.
pub const DEFAULT_HORIZON: u64 = 10_000_000;

/// Largest miss probability the application tolerates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuningTarget {
    epsilon_max: ExactRational,
}

impl TuningTarget {
    /// Target from `epsilon_max` in `(0, 1)`.
    pub fn from_epsilon(epsilon_max: ExactRational) -> Result<Self> {
        if epsilon_max <= ExactRational::zero() || epsilon_max >= ExactRational::one() {
            return Err(Error::domain("epsilon", &epsilon_max, "(0, 1)"));
        }
        Ok(TuningTarget { epsilon_max })
    }

    /// Target from the required hit probability `p = 1 - epsilon_max`.
    pub fn from_hit_probability(p_min: ExactRational) -> Result<Self> {
        if p_min <= ExactRational::zero() || p_min >= ExactRational::one() {
            return Err(Error::domain("p", &p_min, "(0, 1)"));
        }
        Self::from_epsilon(ExactRational::one() - p_min)
    }

    pub fn epsilon_max(&self) -> &ExactRational {
        &self.epsilon_max
    }

    pub fn p_min(&self) -> ExactRational {
        ExactRational::one() - &self.epsilon_max
    }
}

/// Minimal core size with its witness pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSize<S> {
    pub q: u64,
    /// Miss probability at `q`; meets the target.
    pub epsilon: MissProbability<S>,
    /// Miss probability at `q - 1`; exceeds the target.
    pub epsilon_before: MissProbability<S>,
}

/// Smallest `q` whose miss probability after `alpha` replacements is at most
/// the target.
///
/// The miss probability is non-increasing in `q`, so the answer is bracketed
/// by doubling and then located by bisection. `q = 0` always misses, hence
/// the answer is at least one.
pub fn min_core_size<S: Scalar>(
    n: u64,
    alpha: u64,
    target: &TuningTarget,
    mode: NumericMode,
) -> Result<CoreSize<S>> {
    if n == 0 {
        return Err(Error::domain("n", n, "[1, inf)"));
    }
    if alpha > n {
        return Err(Error::domain("alpha", alpha, "[0, n]"));
    }
    let eval = |q: u64| miss_probability::<S>(n, alpha, q, mode);
    let meets = |q: u64| -> Result<bool> { Ok(eval(q)?.at_most(target.epsilon_max())) };

    if !meets(n)? {
        return Err(Error::Infeasible(format!(
            "no core size reaches epsilon <= {} with alpha = {alpha} of n = {n}",
            target.epsilon_max()
        )));
    }
    let mut fails = 0;
    let mut passes = 1.min(n);
    while !meets(passes)? {
        fails = passes;
        passes = (passes * 2).min(n);
    }
    while passes - fails > 1 {
        let mid = fails + (passes - fails) / 2;
        if meets(mid)? {
            passes = mid;
        } else {
            fails = mid;
        }
    }
    Ok(CoreSize {
        q: passes,
        epsilon: eval(passes)?,
        epsilon_before: eval(passes - 1)?,
    })
}

fn check_open_unit<S: Scalar>(name: &'static str, x: S) -> Result<()> {
    if !(x > S::zero() && x < S::one()) {
        return Err(Error::domain(name, x, "(0, 1)"));
    }
    Ok(())
}

/// `churn_ratio(c, delta) <= budget`, compared as survivor logarithms
/// `delta ln(1 - c) >= ln(1 - budget)` with 64 ulps of slack so that a ratio
/// equal to the budget in exact arithmetic is not rejected by rounding. The
/// left side falls without bound in `delta`, so the boundary walk ends even
/// for budgets next to 1.
fn within_budget<S: Scalar>(c: S, delta: u64, budget: S) -> bool {
    let slack = S::one() + S::epsilon() * S::lit(64.0);
    S::count(delta) * (-c).ln_1p() >= (-budget).ln_1p() * slack
}

/// Largest `delta` with `churn_ratio(c, delta) <= ratio_max`.
///
/// Starts from `⌊ln(1 - C) / ln(1 - c)⌋` and re-evaluates the ratio on both
/// sides of the floor, so a log quotient landing a hair off an integer
/// cannot move the answer.
pub fn delta_for_churn<S: Scalar>(c: S, ratio_max: S) -> Result<u64> {
    check_open_unit("c", c)?;
    check_open_unit("C", ratio_max)?;
    let estimate = ((-ratio_max).ln_1p() / (-c).ln_1p()).floor();
    let mut delta = estimate.to_u64().unwrap_or(0);
    while within_budget(c, delta + 1, ratio_max) {
        delta += 1;
    }
    while delta > 0 && !within_budget(c, delta, ratio_max) {
        delta -= 1;
    }
    Ok(delta)
}

/// Per-unit rate that replaces a fraction `ratio` of the initial nodes in
/// `delta` units: `1 - (1 - C)^(1/delta)`.
pub fn churn_rate_for<S: Scalar>(ratio: S, delta: u64) -> Result<S> {
    check_open_unit("C", ratio)?;
    if delta == 0 {
        return Err(Error::domain("delta", delta, "[1, inf)"));
    }
    Ok(-((-ratio).ln_1p() / S::count(delta)).exp_m1())
}

/// Longest probe period for a core, with witnesses.
#[derive(Debug, Clone, PartialEq)]
pub enum Lifetime<S> {
    /// `delta` meets the target and `delta + 1` does not.
    Bounded {
        delta: u64,
        alpha: u64,
        epsilon: MissProbability<S>,
        alpha_next: u64,
        epsilon_next: MissProbability<S>,
    },
    /// The target still holds at the search horizon.
    Unbounded {
        horizon: u64,
        alpha: u64,
        epsilon: MissProbability<S>,
    },
}

impl<S> Lifetime<S> {
    pub fn delta(&self) -> Option<u64> {
        match self {
            Lifetime::Bounded { delta, .. } => Some(*delta),
            Lifetime::Unbounded { .. } => None,
        }
    }
}

/// Largest `delta` such that `q` probes still meet the target after `delta`
/// units of churn at rate `c`.
///
/// The miss probability depends on `delta` only through
/// `alpha = ⌈churn_ratio(c, delta) · n⌉`, which is non-decreasing in `delta`,
/// and it is non-decreasing in `alpha`. The search first finds the largest
/// tolerable `alpha`, then the last `delta` (up to `horizon`) whose `alpha`
/// stays within it.
pub fn max_delta<S: Scalar>(
    n: u64,
    q: u64,
    c: S,
    target: &TuningTarget,
    mode: NumericMode,
    horizon: u64,
) -> Result<Lifetime<S>> {
    if n == 0 {
        return Err(Error::domain("n", n, "[1, inf)"));
    }
    if q == 0 || q > n {
        return Err(Error::domain("q", q, "[1, n]"));
    }
    check_rate(c)?;
    let eval = |alpha: u64| miss_probability::<S>(n, alpha, q, mode);
    let meets = |alpha: u64| -> Result<bool> { Ok(eval(alpha)?.at_most(target.epsilon_max())) };

    if !meets(0)? {
        return Err(Error::Infeasible(format!(
            "q = {q} misses with probability above {} even without churn",
            target.epsilon_max()
        )));
    }
    // largest tolerable alpha
    let (mut ok, mut bad) = (0u64, n + 1);
    while bad - ok > 1 {
        let mid = ok + (bad - ok) / 2;
        if meets(mid)? {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    let alpha_max = ok;

    let alpha_at = |delta: u64| -> Result<u64> { replaced_count(n, churn_ratio(c, delta)?) };
    let fits = |delta: u64| -> Result<bool> { Ok(alpha_at(delta)? <= alpha_max) };

    if fits(horizon)? {
        let alpha = alpha_at(horizon)?;
        return Ok(Lifetime::Unbounded {
            horizon,
            alpha,
            epsilon: eval(alpha)?,
        });
    }
    let (mut good, mut over) = (0u64, 1u64.min(horizon));
    while fits(over)? {
        good = over;
        over = (over * 2).min(horizon);
    }
    while over - good > 1 {
        let mid = good + (over - good) / 2;
        if fits(mid)? {
            good = mid;
        } else {
            over = mid;
        }
    }
    let alpha = alpha_at(good)?;
    let alpha_next = alpha_at(good + 1)?;
    Ok(Lifetime::Bounded {
        delta: good,
        alpha,
        epsilon: eval(alpha)?,
        alpha_next,
        epsilon_next: eval(alpha_next)?,
    })
}
