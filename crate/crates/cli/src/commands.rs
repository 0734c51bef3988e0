use churnprobe::fraction::to_scalar;
use churnprobe::simulator::expected_survivor_fraction;
use churnprobe::{
    churn_rate_for, churn_ratio, compare_with_analytic, delta_for_churn, max_delta, min_core_size,
    miss_probability, parse_fraction, replaced_count, replaced_count_exact, Comparison,
    ExactRational, Lifetime, MissProbability, Model, NumericMode, TrialConfig, TuningTarget,
};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{
    ChurnArgs, ChurnRateArgs, LifetimeArgs, ModeArg, ProbArgs, SimulateArgs, SizeArgs, SweepArgs,
    SweepVar, TableArgs, TargetArgs,
};

/// Upper bound on the number of points a sweep may produce.
const MAX_SWEEP_POINTS: u64 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] churnprobe::Error),
    /// The simulation ran but disagrees with the closed form.
    #[error("z = {z} exceeds the flag threshold")]
    CheckFailed { report: String, z: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(churnprobe::Error::Infeasible(_)) => 3,
            CliError::Core(_) => 2,
            CliError::CheckFailed { .. } => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn resolve_mode(mode: ModeArg, n: u64) -> NumericMode {
    match mode {
        ModeArg::Auto => NumericMode::auto(n),
        ModeArg::Exact => NumericMode::Exact,
        ModeArg::Logspace => NumericMode::LogSpace,
    }
}

/// Parses a churn ratio token; `static` stands for zero.
pub fn parse_ratio(token: &str) -> CliResult<ExactRational> {
    if token.trim().eq_ignore_ascii_case("static") {
        return Ok(ExactRational::zero());
    }
    let ratio = parse_fraction(token)?;
    if ratio > ExactRational::one() {
        return usage(format!("C = {token} is outside [0, 1]"));
    }
    Ok(ratio)
}

fn parse_rate(token: &str) -> CliResult<f64> {
    let rate = parse_fraction(token)?;
    if rate >= ExactRational::one() {
        return usage(format!("c = {token} is outside [0, 1)"));
    }
    Ok(to_scalar(&rate))
}

fn parse_target(target: &TargetArgs) -> CliResult<TuningTarget> {
    match (&target.epsilon, &target.p) {
        (Some(eps), None) => Ok(TuningTarget::from_epsilon(parse_fraction(eps)?)?),
        (None, Some(p)) => Ok(TuningTarget::from_hit_probability(parse_fraction(p)?)?),
        _ => usage("give exactly one of --epsilon or --p"),
    }
}

/// Replacement count and churn ratio for one population size.
#[derive(Debug, Clone)]
struct Churn {
    alpha: u64,
    ratio: f64,
}

fn resolve_churn(args: &ChurnArgs, n: u64) -> CliResult<Churn> {
    let forms = [
        args.alpha.is_some(),
        args.ratio.is_some(),
        args.rate.is_some(),
    ];
    if forms.iter().filter(|&&f| f).count() != 1 {
        return usage("give exactly one of --alpha, --C, or --c with --delta");
    }
    if args.delta.is_some() != args.rate.is_some() {
        return usage("--c and --delta go together");
    }
    if let Some(alpha) = args.alpha {
        if alpha > n {
            return usage(format!("alpha = {alpha} exceeds n = {n}"));
        }
        return Ok(Churn {
            alpha,
            ratio: alpha as f64 / n as f64,
        });
    }
    if let Some(token) = &args.ratio {
        let ratio = parse_ratio(token)?;
        return Ok(Churn {
            alpha: replaced_count_exact(n, &ratio)?,
            ratio: to_scalar(&ratio),
        });
    }
    let c = parse_rate(args.rate.as_deref().unwrap_or_default())?;
    let ratio = churn_ratio(c, args.delta.unwrap_or_default())?;
    Ok(Churn {
        alpha: replaced_count(n, ratio)?,
        ratio,
    })
}

/// Scalar view of a miss probability plus its exact value when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epsilon {
    pub epsilon: f64,
    pub p: f64,
    pub ln_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_exact: Option<String>,
}

impl From<&MissProbability<f64>> for Epsilon {
    fn from(m: &MissProbability<f64>) -> Self {
        Epsilon {
            epsilon: m.epsilon(),
            p: m.p_hit(),
            ln_epsilon: m.ln_epsilon(),
            epsilon_exact: m.exact().map(ToString::to_string),
            p_exact: m.p_hit_exact().map(|r| r.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRecord {
    pub n: u64,
    pub q: u64,
    pub alpha: u64,
    pub churn_ratio: f64,
    pub mode: NumericMode,
    #[serde(flatten)]
    pub value: Epsilon,
}

pub fn prob(args: &ProbArgs) -> CliResult<ProbRecord> {
    let churn = resolve_churn(&args.churn, args.n)?;
    let mode = resolve_mode(args.mode, args.n);
    let eps = miss_probability::<f64>(args.n, churn.alpha, args.q, mode)?;
    Ok(ProbRecord {
        n: args.n,
        q: args.q,
        alpha: churn.alpha,
        churn_ratio: churn.ratio,
        mode,
        value: Epsilon::from(&eps),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub n: u64,
    pub alpha: u64,
    pub churn_ratio: f64,
    pub epsilon_max: String,
    pub mode: NumericMode,
    pub q: u64,
    pub at_q: Epsilon,
    pub at_q_minus_1: Epsilon,
}

pub fn size(args: &SizeArgs) -> CliResult<SizeRecord> {
    let churn = resolve_churn(&args.churn, args.n)?;
    let target = parse_target(&args.target)?;
    let mode = resolve_mode(args.mode, args.n);
    let found = min_core_size::<f64>(args.n, churn.alpha, &target, mode)?;
    Ok(SizeRecord {
        n: args.n,
        alpha: churn.alpha,
        churn_ratio: churn.ratio,
        epsilon_max: target.epsilon_max().to_string(),
        mode,
        q: found.q,
        at_q: Epsilon::from(&found.epsilon),
        at_q_minus_1: Epsilon::from(&found.epsilon_before),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLifetime {
    pub c: f64,
    pub churn_ratio_max: String,
    pub delta: u64,
    pub churn_ratio_at_delta: f64,
    pub churn_ratio_at_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreLifetime {
    pub n: u64,
    pub q: u64,
    pub c: f64,
    pub epsilon_max: String,
    pub mode: NumericMode,
    pub bounded: bool,
    pub delta: Option<u64>,
    pub horizon: u64,
    pub alpha: u64,
    pub at_delta: Epsilon,
    pub alpha_next: Option<u64>,
    pub at_next: Option<Epsilon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LifetimeRecord {
    Budget(BudgetLifetime),
    Core(CoreLifetime),
}

pub fn lifetime(args: &LifetimeArgs) -> CliResult<LifetimeRecord> {
    let c = parse_rate(&args.rate)?;
    if let Some(token) = &args.ratio {
        if args.target.epsilon.is_some() || args.target.p.is_some() {
            return usage("--C bounds churn alone; drop --epsilon/--p or use --n/--q");
        }
        let ratio = parse_ratio(token)?;
        let delta = delta_for_churn(c, to_scalar::<f64>(&ratio))?;
        return Ok(LifetimeRecord::Budget(BudgetLifetime {
            c,
            churn_ratio_max: ratio.to_string(),
            delta,
            churn_ratio_at_delta: churn_ratio(c, delta)?,
            churn_ratio_at_next: churn_ratio(c, delta + 1)?,
        }));
    }
    let (Some(n), Some(q)) = (args.n, args.q) else {
        return usage("give --C, or --n and --q with --epsilon or --p");
    };
    let target = parse_target(&args.target)?;
    let mode = resolve_mode(args.mode, n);
    let found = max_delta::<f64>(n, q, c, &target, mode, args.horizon)?;
    let epsilon_max = target.epsilon_max().to_string();
    Ok(LifetimeRecord::Core(match found {
        Lifetime::Bounded {
            delta,
            alpha,
            epsilon,
            alpha_next,
            epsilon_next,
        } => CoreLifetime {
            n,
            q,
            c,
            epsilon_max,
            mode,
            bounded: true,
            delta: Some(delta),
            horizon: args.horizon,
            alpha,
            at_delta: Epsilon::from(&epsilon),
            alpha_next: Some(alpha_next),
            at_next: Some(Epsilon::from(&epsilon_next)),
        },
        Lifetime::Unbounded {
            horizon,
            alpha,
            epsilon,
        } => CoreLifetime {
            n,
            q,
            c,
            epsilon_max,
            mode,
            bounded: false,
            delta: None,
            horizon,
            alpha,
            at_delta: Epsilon::from(&epsilon),
            alpha_next: None,
            at_next: None,
        },
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnRateRecord {
    pub churn_ratio: String,
    pub delta: u64,
    pub c: f64,
}

pub fn churn_rate(args: &ChurnRateArgs) -> CliResult<ChurnRateRecord> {
    let ratio = parse_ratio(&args.ratio)?;
    let c = churn_rate_for(to_scalar::<f64>(&ratio), args.delta)?;
    Ok(ChurnRateRecord {
        churn_ratio: ratio.to_string(),
        delta: args.delta,
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub p: String,
    #[serde(rename = "C")]
    pub churn_ratio: String,
    pub n: u64,
    pub alpha: u64,
    pub mode: NumericMode,
    pub q: u64,
    pub epsilon: f64,
    pub epsilon_before: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub n: Vec<u64>,
    pub cells: Vec<TableCell>,
}

pub fn table(args: &TableArgs) -> CliResult<TableRecord> {
    if args.n_list.is_empty() || args.p_list.is_empty() || args.ratio_list.is_empty() {
        return usage("table needs at least one value for each of --n, --p and --C");
    }
    let mut cells = Vec::new();
    for p_label in &args.p_list {
        let target = TuningTarget::from_hit_probability(parse_fraction(p_label)?)?;
        for c_label in &args.ratio_list {
            let ratio = parse_ratio(c_label)?;
            for &n in &args.n_list {
                let alpha = replaced_count_exact(n, &ratio)?;
                let mode = resolve_mode(args.mode, n);
                let found = min_core_size::<f64>(n, alpha, &target, mode)?;
                cells.push(TableCell {
                    p: p_label.trim().to_string(),
                    churn_ratio: c_label.trim().to_string(),
                    n,
                    alpha,
                    mode,
                    q: found.q,
                    epsilon: found.epsilon.epsilon(),
                    epsilon_before: found.epsilon_before.epsilon(),
                });
            }
        }
    }
    Ok(TableRecord {
        n: args.n_list.clone(),
        cells,
    })
}

/// A swept value: a count for `q` and `delta`, a real otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Count(u64),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: SweepValue,
    #[serde(rename = "C")]
    pub churn_ratio: Option<f64>,
    pub alpha: Option<u64>,
    pub q: Option<u64>,
    pub epsilon: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub variable: String,
    pub rows: Vec<SweepRow>,
}

fn split_range(spec: &str) -> CliResult<[&str; 3]> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, s] => Ok([a, b, s]),
        _ => usage(format!("range {spec:?} is not START:STOP:STEP")),
    }
}

fn parse_count(token: &str) -> CliResult<u64> {
    token
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{token:?} is not a non-negative integer")))
}

fn count_points(args: &SweepArgs) -> CliResult<Vec<u64>> {
    let points = match (&args.range, &args.values) {
        (Some(spec), _) => {
            let [a, b, s] = split_range(spec)?;
            let (start, stop, step) = (parse_count(a)?, parse_count(b)?, parse_count(s)?);
            if step == 0 {
                return usage("range step must be positive");
            }
            if start <= stop && (stop - start) / step >= MAX_SWEEP_POINTS {
                return usage("range has too many points");
            }
            (start..=stop).step_by(step as usize).collect()
        }
        (None, Some(values)) => values
            .iter()
            .map(|v| parse_count(v))
            .collect::<CliResult<_>>()?,
        (None, None) => Vec::new(),
    };
    Ok(points)
}

fn real_points(args: &SweepArgs) -> CliResult<Vec<ExactRational>> {
    let points = match (&args.range, &args.values) {
        (Some(spec), _) => {
            let [a, b, s] = split_range(spec)?;
            let (start, stop, step) = (parse_fraction(a)?, parse_fraction(b)?, parse_fraction(s)?);
            if step.is_zero() {
                return usage("range step must be positive");
            }
            if start <= stop {
                let span = ((&stop - &start) / &step).to_integer();
                if span >= MAX_SWEEP_POINTS.into() {
                    return usage("range has too many points");
                }
            }
            let mut out = Vec::new();
            let mut v = start;
            while v <= stop {
                out.push(v.clone());
                v += &step;
            }
            out
        }
        (None, Some(values)) => values
            .iter()
            .map(|v| parse_fraction(v))
            .collect::<Result<_, _>>()?,
        (None, None) => Vec::new(),
    };
    Ok(points)
}

fn require(value: Option<u64>, flag: &str, var: &str) -> CliResult<u64> {
    value.ok_or_else(|| CliError::Usage(format!("sweeping {var} needs {flag}")))
}

/// Fills alpha, epsilon and p from a churn ratio when `n` (and `q`) are known.
fn row_from_ratio(
    variable: SweepValue,
    ratio: f64,
    alpha: Option<u64>,
    q: Option<u64>,
    n: Option<u64>,
    mode: ModeArg,
) -> CliResult<SweepRow> {
    let (epsilon, p) = match (n, alpha, q) {
        (Some(n), Some(alpha), Some(q)) => {
            let eps = miss_probability::<f64>(n, alpha, q, resolve_mode(mode, n))?;
            (Some(eps.epsilon()), Some(eps.p_hit()))
        }
        _ => (None, None),
    };
    Ok(SweepRow {
        variable,
        churn_ratio: Some(ratio),
        alpha,
        q,
        epsilon,
        p,
    })
}

pub fn sweep(args: &SweepArgs) -> CliResult<SweepRecord> {
    let var = args.variable;
    let mut rows = Vec::new();
    match var {
        SweepVar::Q => {
            let n = require(args.n, "--n", "q")?;
            if args.q.is_some() {
                return usage("--q is the swept variable");
            }
            let churn = resolve_churn(&args.churn, n)?;
            for q in count_points(args)? {
                rows.push(row_from_ratio(
                    SweepValue::Count(q),
                    churn.ratio,
                    Some(churn.alpha),
                    Some(q),
                    Some(n),
                    args.mode,
                )?);
            }
        }
        SweepVar::Delta | SweepVar::Rate => {
            let ChurnArgs {
                alpha: None,
                ratio: None,
                ..
            } = args.churn
            else {
                return usage("sweeping c or delta takes --c or --delta only");
            };
            let (fixed_rate, fixed_delta) = (args.churn.rate.as_deref(), args.churn.delta);
            let points: Vec<(SweepValue, f64, u64)> = if var == SweepVar::Delta {
                if fixed_delta.is_some() {
                    return usage("--delta is the swept variable");
                }
                let Some(rate) = fixed_rate else {
                    return usage("sweeping delta needs --c");
                };
                let c = parse_rate(rate)?;
                count_points(args)?
                    .into_iter()
                    .map(|d| (SweepValue::Count(d), c, d))
                    .collect()
            } else {
                if fixed_rate.is_some() {
                    return usage("--c is the swept variable");
                }
                let delta = require(fixed_delta, "--delta", "c")?;
                real_points(args)?
                    .into_iter()
                    .map(|c| {
                        let c: f64 = to_scalar(&c);
                        (SweepValue::Real(c), c, delta)
                    })
                    .collect()
            };
            for (variable, c, delta) in points {
                let ratio = churn_ratio(c, delta)?;
                let alpha = args.n.map(|n| replaced_count(n, ratio)).transpose()?;
                rows.push(row_from_ratio(
                    variable, ratio, alpha, args.q, args.n, args.mode,
                )?);
            }
        }
        SweepVar::Ratio => {
            if args.churn.alpha.is_some() || args.churn.ratio.is_some() || args.churn.rate.is_some()
            {
                return usage("--C is the swept variable");
            }
            for ratio in real_points(args)? {
                if ratio > ExactRational::one() {
                    return usage(format!("C = {ratio} is outside [0, 1]"));
                }
                let alpha = args
                    .n
                    .map(|n| replaced_count_exact(n, &ratio))
                    .transpose()?;
                let value: f64 = to_scalar(&ratio);
                rows.push(row_from_ratio(
                    SweepValue::Real(value),
                    value,
                    alpha,
                    args.q,
                    args.n,
                    args.mode,
                )?);
            }
        }
        SweepVar::Epsilon => {
            let n = require(args.n, "--n", "epsilon")?;
            if args.q.is_some() {
                return usage("sweeping epsilon solves for q; drop --q");
            }
            let churn = resolve_churn(&args.churn, n)?;
            let mode = resolve_mode(args.mode, n);
            for eps_max in real_points(args)? {
                let value: f64 = to_scalar(&eps_max);
                let target = TuningTarget::from_epsilon(eps_max)?;
                let found = min_core_size::<f64>(n, churn.alpha, &target, mode)?;
                rows.push(SweepRow {
                    variable: SweepValue::Real(value),
                    churn_ratio: Some(churn.ratio),
                    alpha: Some(churn.alpha),
                    q: Some(found.q),
                    epsilon: Some(found.epsilon.epsilon()),
                    p: Some(found.epsilon.p_hit()),
                });
            }
        }
    }
    if rows.is_empty() {
        return usage("the sweep range is empty");
    }
    let variable = match var {
        SweepVar::Q => "q",
        SweepVar::Delta => "delta",
        SweepVar::Rate => "c",
        SweepVar::Ratio => "C",
        SweepVar::Epsilon => "epsilon",
    };
    Ok(SweepRecord {
        variable: variable.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRecord {
    pub config: TrialConfig,
    pub comparison: Comparison,
    pub expected_survivor_fraction: Option<f64>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<SimulateRecord> {
    let model = match (args.alpha, &args.rate, args.delta) {
        (Some(alpha), None, None) => Model::Urn { alpha },
        (None, Some(rate), Some(delta)) => Model::ChurnProcess {
            c: parse_rate(rate)?,
            delta,
            fractional: args.fractional,
        },
        _ => return usage("give --alpha, or --c with --delta"),
    };
    let config = TrialConfig {
        n: args.n,
        q: args.q,
        trials: args.trials,
        model,
        seed: args.seed,
    };
    let comparison = compare_with_analytic(&config)?;
    Ok(SimulateRecord {
        config,
        comparison,
        expected_survivor_fraction: expected_survivor_fraction(&config),
    })
}
