//! Seeded Monte Carlo check of the analytic miss probability.
//!
//! Two models are available. The urn model replays the combinatorial
//! experiment behind the closed form: `q` green balls, `alpha` balls
//! repainted red, `q` balls drawn without replacement. The churn-process
//! model replaces `⌈c·n⌉` uniformly chosen current nodes every time unit
//! (initial or already joined ones alike) and probes at the end.
//!
//! Trial `i` draws its randomness from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `i`, and all aggregates are integer sums, so a report
//! depends only on `(seed, config)` and not on how trials are scheduled
//! across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::{check_rate, churn_ratio, miss_probability, replaced_count, NumericMode};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    /// `alpha` uniformly chosen nodes are replaced at once.
    Urn { alpha: u64 },
    /// `delta` units of churn at per-unit rate `c`.
    ChurnProcess {
        c: f64,
        delta: u64,
        /// Replace `c·n` nodes per unit on average, carrying the fractional
        /// remainder, instead of `⌈c·n⌉` every unit.
        #[serde(default)]
        fractional: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: u64,
    pub q: u64,
    pub trials: u64,
    #[serde(flatten)]
    pub model: Model,
    pub seed: u64,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > u64::from(u32::MAX) {
            return Err(Error::domain("n", self.n, "[1, 2^32)"));
        }
        if self.q > self.n {
            return Err(Error::domain("q", self.q, "[0, n]"));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials", self.trials, "[1, inf)"));
        }
        match self.model {
            Model::Urn { alpha } if alpha > self.n => Err(Error::domain("alpha", alpha, "[0, n]")),
            Model::ChurnProcess { c, .. } => check_rate(c),
            _ => Ok(()),
        }
    }

    /// Replacement count the analytic formula uses for this configuration.
    pub fn analytic_alpha(&self) -> Result<u64> {
        match self.model {
            Model::Urn { alpha } => Ok(alpha),
            Model::ChurnProcess { c, delta, .. } => replaced_count(self.n, churn_ratio(c, delta)?),
        }
    }

    /// Nodes replaced per unit in the non-fractional churn process.
    pub fn per_unit_replacements(&self) -> Option<u64> {
        match self.model {
            Model::ChurnProcess { c, .. } => replaced_count(self.n, c).ok(),
            Model::Urn { .. } => None,
        }
    }
}

/// Survivor statistics of the churn process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivorStats {
    /// Mean number of initial core members still present at probe time.
    pub core_mean: f64,
    pub core_stddev: f64,
    /// Mean fraction of all initial nodes still present.
    pub initial_fraction_mean: f64,
    pub initial_fraction_stddev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trials: u64,
    pub misses: u64,
    pub epsilon_hat: f64,
    /// 99% Wilson score interval for the miss probability.
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub survivors: Option<SurvivorStats>,
}

impl TrialReport {
    /// Standard error of the mean initial-survivor fraction.
    pub fn survivor_fraction_stderr(&self) -> Option<f64> {
        self.survivors
            .map(|s| s.initial_fraction_stddev / (self.trials as f64).sqrt())
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile
/// `z`. Contains `successes / trials` by construction.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
    )
}

/// Random generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform k-subsets of `0..n` by partial Fisher–Yates. The swaps are undone
/// after each draw, so the slot array is the identity between draws and a
/// draw depends only on the generator state.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    slots: Vec<u32>,
    picks: Vec<u32>,
}

impl SubsetSampler {
    pub fn new(n: u32) -> Self {
        SubsetSampler {
            slots: (0..n).collect(),
            picks: Vec::new(),
        }
    }

    /// Draws `k` distinct elements and hands them to `f`.
    pub fn with_sample<R: Rng, T>(
        &mut self,
        k: usize,
        rng: &mut R,
        f: impl FnOnce(&[u32]) -> T,
    ) -> T {
        let n = self.slots.len() as u32;
        debug_assert!(k <= self.slots.len());
        self.picks.clear();
        for i in 0..k {
            let j = rng.random_range(i as u32..n);
            self.slots.swap(i, j as usize);
            self.picks.push(j);
        }
        let out = f(&self.slots[..k]);
        for (i, &j) in self.picks.iter().enumerate().rev() {
            self.slots.swap(i, j as usize);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    misses: u64,
    core_survivors: u64,
    core_survivors_sq: u128,
    initial_survivors: u64,
    initial_survivors_sq: u128,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            misses: self.misses + other.misses,
            core_survivors: self.core_survivors + other.core_survivors,
            core_survivors_sq: self.core_survivors_sq + other.core_survivors_sq,
            initial_survivors: self.initial_survivors + other.initial_survivors,
            initial_survivors_sq: self.initial_survivors_sq + other.initial_survivors_sq,
        }
    }
}

const BLANK: u8 = 0;
const GREEN: u8 = 1;
const RED: u8 = 2;

struct UrnScratch {
    sampler: SubsetSampler,
    marks: Vec<u8>,
    green: Vec<u32>,
}

fn urn_trial(scratch: &mut UrnScratch, q: usize, alpha: usize, rng: &mut ChaCha8Rng) -> bool {
    let UrnScratch {
        sampler,
        marks,
        green,
    } = scratch;
    sampler.with_sample(q, rng, |core| {
        green.clear();
        green.extend_from_slice(core);
    });
    for &g in green.iter() {
        marks[g as usize] = GREEN;
    }
    sampler.with_sample(alpha, rng, |replaced| {
        for &r in replaced {
            if marks[r as usize] == GREEN {
                marks[r as usize] = RED;
            }
        }
    });
    let hit = sampler.with_sample(q, rng, |probes| {
        probes.iter().any(|&p| marks[p as usize] == GREEN)
    });
    for &g in green.iter() {
        marks[g as usize] = BLANK;
    }
    !hit
}

/// Replays the urn experiment `trials` times.
pub fn run_urn_trials(config: &TrialConfig) -> Result<TrialReport> {
    config.validate()?;
    let Model::Urn { alpha } = config.model else {
        return Err(Error::domain("model", "churn_process", "urn"));
    };
    let (n, q, alpha) = (config.n as u32, config.q as usize, alpha as usize);
    let seed = config.seed;
    let tally = (0..config.trials)
        .into_par_iter()
        .map_init(
            || UrnScratch {
                sampler: SubsetSampler::new(n),
                marks: vec![BLANK; n as usize],
                green: Vec::with_capacity(q),
            },
            |scratch, i| {
                let mut rng = trial_rng(seed, i);
                Tally {
                    misses: u64::from(urn_trial(scratch, q, alpha, &mut rng)),
                    ..Tally::default()
                }
            },
        )
        .reduce(Tally::default, Tally::merge);
    Ok(report(config.trials, tally, false))
}

struct ChurnScratch {
    sampler: SubsetSampler,
    original: Vec<bool>,
    core: Vec<bool>,
    core_list: Vec<u32>,
}

struct ChurnTrial {
    missed: bool,
    core_survivors: u64,
    initial_survivors: u64,
}

fn churn_trial(
    scratch: &mut ChurnScratch,
    q: usize,
    schedule: &[usize],
    rng: &mut ChaCha8Rng,
) -> ChurnTrial {
    let ChurnScratch {
        sampler,
        original,
        core,
        core_list,
    } = scratch;
    original.fill(true);
    let mut initial_survivors = original.len() as u64;
    sampler.with_sample(q, rng, |picked| {
        core_list.clear();
        core_list.extend_from_slice(picked);
    });
    for &s in core_list.iter() {
        core[s as usize] = true;
    }
    // a replaced slot holds a fresh node that never turns back into an initial one
    for &count in schedule {
        sampler.with_sample(count, rng, |leaving| {
            for &s in leaving {
                if std::mem::replace(&mut original[s as usize], false) {
                    initial_survivors -= 1;
                }
            }
        });
    }
    let core_survivors = core_list.iter().filter(|&&s| original[s as usize]).count() as u64;
    let hit = sampler.with_sample(q, rng, |probes| {
        probes
            .iter()
            .any(|&p| core[p as usize] && original[p as usize])
    });
    for &s in core_list.iter() {
        core[s as usize] = false;
    }
    ChurnTrial {
        missed: !hit,
        core_survivors,
        initial_survivors,
    }
}

/// Per-unit replacement counts for the churn process.
fn replacement_schedule(n: u64, c: f64, delta: u64, fractional: bool) -> Result<Vec<usize>> {
    if !fractional {
        let per_unit = replaced_count(n, c)? as usize;
        return Ok(vec![per_unit; delta as usize]);
    }
    let mut carry = 0.0;
    Ok((0..delta)
        .map(|_| {
            carry += c * n as f64;
            let whole = carry.floor();
            carry -= whole;
            (whole as usize).min(n as usize)
        })
        .collect())
}

/// Simulates the unit-by-unit churn process `trials` times.
pub fn run_churn_trials(config: &TrialConfig) -> Result<TrialReport> {
    config.validate()?;
    let Model::ChurnProcess {
        c,
        delta,
        fractional,
    } = config.model
    else {
        return Err(Error::domain("model", "urn", "churn_process"));
    };
    let n = config.n as u32;
    let q = config.q as usize;
    let schedule = replacement_schedule(config.n, c, delta, fractional)?;
    let seed = config.seed;
    let tally = (0..config.trials)
        .into_par_iter()
        .map_init(
            || ChurnScratch {
                sampler: SubsetSampler::new(n),
                original: vec![true; n as usize],
                core: vec![false; n as usize],
                core_list: Vec::with_capacity(q),
            },
            |scratch, i| {
                let mut rng = trial_rng(seed, i);
                let t = churn_trial(scratch, q, &schedule, &mut rng);
                Tally {
                    misses: u64::from(t.missed),
                    core_survivors: t.core_survivors,
                    core_survivors_sq: u128::from(t.core_survivors).pow(2),
                    initial_survivors: t.initial_survivors,
                    initial_survivors_sq: u128::from(t.initial_survivors).pow(2),
                }
            },
        )
        .reduce(Tally::default, Tally::merge);
    let mut out = report(config.trials, tally, true);
    if let Some(s) = out.survivors.as_mut() {
        let n = config.n as f64;
        s.initial_fraction_mean /= n;
        s.initial_fraction_stddev /= n;
    }
    Ok(out)
}

fn mean_and_stddev(sum: u64, sum_sq: u128, count: u64) -> (f64, f64) {
    let n = count as f64;
    let mean = sum as f64 / n;
    if count < 2 {
        return (mean, 0.0);
    }
    // exact integer numerator: count·Σx² - (Σx)²
    let spread = (u128::from(count) * sum_sq).saturating_sub(u128::from(sum).pow(2));
    let var = spread as f64 / (n * (n - 1.0));
    (mean, var.sqrt())
}

fn report(trials: u64, tally: Tally, with_survivors: bool) -> TrialReport {
    let (ci_low, ci_high) = wilson_interval(tally.misses, trials, Z_99);
    let survivors = with_survivors.then(|| {
        let (core_mean, core_stddev) =
            mean_and_stddev(tally.core_survivors, tally.core_survivors_sq, trials);
        let (initial_fraction_mean, initial_fraction_stddev) =
            mean_and_stddev(tally.initial_survivors, tally.initial_survivors_sq, trials);
        SurvivorStats {
            core_mean,
            core_stddev,
            initial_fraction_mean,
            initial_fraction_stddev,
        }
    });
    TrialReport {
        trials,
        misses: tally.misses,
        epsilon_hat: tally.misses as f64 / trials as f64,
        ci_low,
        ci_high,
        survivors,
    }
}

/// Runs whichever model the configuration names.
pub fn run_trials(config: &TrialConfig) -> Result<TrialReport> {
    match config.model {
        Model::Urn { .. } => run_urn_trials(config),
        Model::ChurnProcess { .. } => run_churn_trials(config),
    }
}

/// Simulation next to the analytic value it estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub report: TrialReport,
    /// Replacement count fed to the closed form.
    pub alpha: u64,
    pub analytic_epsilon: f64,
    /// `(epsilon_hat - epsilon) / sqrt(epsilon (1 - epsilon) / trials)`.
    pub z_score: f64,
    /// `|z| > 3`.
    pub flagged: bool,
    pub ci_contains_analytic: bool,
}

/// Flag threshold on `|z|`.
pub const Z_FLAG: f64 = 3.0;

/// Runs the simulation and scores it against the closed form. For the churn
/// process the closed form uses `alpha = ⌈(1 - (1 - c)^delta)·n⌉`, so the
/// z-score there measures the gap left by treating survivor decay as
/// deterministic.
pub fn compare_with_analytic(config: &TrialConfig) -> Result<Comparison> {
    let report = run_trials(config)?;
    let alpha = config.analytic_alpha()?;
    let analytic = miss_probability::<f64>(config.n, alpha, config.q, NumericMode::auto(config.n))?;
    let eps = analytic.epsilon();
    let sd = (eps * (1.0 - eps) / config.trials as f64).sqrt();
    let diff = report.epsilon_hat - eps;
    let z_score = if sd > 0.0 {
        diff / sd
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(Comparison {
        report,
        alpha,
        analytic_epsilon: eps,
        z_score,
        flagged: z_score.abs() > Z_FLAG,
        ci_contains_analytic: report.ci_low <= eps && eps <= report.ci_high,
    })
}

/// Expected fraction of initial nodes left after the churn process,
/// `(1 - ⌈c·n⌉/n)^delta`.
pub fn expected_survivor_fraction(config: &TrialConfig) -> Option<f64> {
    match config.model {
        Model::ChurnProcess {
            delta,
            fractional: false,
            ..
        } => {
            let per_unit = config.per_unit_replacements()? as f64;
            Some((1.0 - per_unit / config.n as f64).powi(delta as i32))
        }
        _ => None,
    }
}
