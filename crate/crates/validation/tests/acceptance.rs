//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use churnprobe::combinatorics::binomial_exact;
use churnprobe::persistence::support;
use churnprobe::simulator::{expected_survivor_fraction, trial_rng};
use churnprobe::{
    churn_rate_for, churn_ratio, compare_with_analytic, conditional_miss_exact, delta_for_churn,
    hypergeometric_pmf_exact, max_delta, min_core_size, miss_probability, miss_probability_exact,
    replaced_count, run_churn_trials, ExactRational, Lifetime, Model, NumericMode, TrialConfig,
    TuningTarget,
};
use churnprobe_validation::{
    enumerate_miss_probabilities, ratio, PUBLISHED_C, PUBLISHED_N, PUBLISHED_P, PUBLISHED_Q,
};
use num_traits::{One, Zero};
use rand::Rng;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Relative gap between two miss probabilities, measured through their
/// logarithms so that values below the f64 range still compare.
fn rel_gap(ln_a: f64, ln_b: f64) -> f64 {
    if ln_a == f64::NEG_INFINITY || ln_b == f64::NEG_INFINITY {
        return if ln_a == ln_b { 0.0 } else { f64::INFINITY };
    }
    (ln_a - ln_b).exp_m1().abs()
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let out = churnprobe_cli::run_args(["churnprobe", "--csv", "table", "--mode", "logspace"]);
    let elapsed = start.elapsed();
    let csv = match out {
        Ok(csv) => csv,
        Err(e) => return Outcome::new(false, format!("table failed: {e}")),
    };
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    if rows.len() != 30 {
        return Outcome::new(false, format!("expected 30 cells, got {}", rows.len()));
    }
    let mut exact = 0;
    let mut notes = Vec::new();
    let mut deviations_ok = true;
    for (i, row) in rows.iter().enumerate() {
        let (pi, ci, ni) = (i / 15, (i / 3) % 5, i % 3);
        let expected = PUBLISHED_Q[pi][ci][ni];
        let got: u64 = row[5].parse().expect("q column");
        if got == expected {
            exact += 1;
            continue;
        }
        // witness: the published size evaluated under alpha = ceil(C n)
        let n = PUBLISHED_N[ni];
        let alpha: u64 = row[3].parse().expect("alpha column");
        let target = TuningTarget::from_hit_probability(
            churnprobe::parse_fraction(PUBLISHED_P[pi]).expect("p label"),
        )
        .expect("target");
        let eps = |q| miss_probability_exact(n, alpha, q).expect("exact epsilon");
        let at_published = eps(expected);
        let verdict = if &at_published <= target.epsilon_max() {
            "meets"
        } else {
            "fails"
        };
        let off = got.abs_diff(expected);
        deviations_ok &= off <= 1;
        notes.push(format!(
            "n={n} p={} C={}: published {expected}, computed {got} (off by {off}); \
             epsilon({expected}) = {:.6} {verdict} the bound {}, epsilon({}) = {:.6}, epsilon({got}) = {:.6}",
            PUBLISHED_P[pi],
            PUBLISHED_C[ci],
            churnprobe::fraction::to_scalar::<f64>(&at_published),
            target.epsilon_max(),
            got - 1,
            churnprobe::fraction::to_scalar::<f64>(&eps(got - 1)),
            churnprobe::fraction::to_scalar::<f64>(&eps(got)),
        ));
    }
    let fast = elapsed <= Duration::from_secs(60);
    let pass = exact >= 28 && deviations_ok && fast;
    let mut detail = format!("{exact}/30 exact in {:.2?}", elapsed);
    for note in notes {
        detail.push_str("\n        ");
        detail.push_str(&note);
    }
    Outcome::new(pass, detail)
}

fn delta_anchors() -> Outcome {
    let d10 = delta_for_churn(1e-3, 0.10).expect("delta");
    let d30 = delta_for_churn(1e-3, 0.30).expect("delta");
    Outcome::new(
        d10 == 105 && d30 == 356,
        format!("delta(1e-3, 10%) = {d10}, delta(1e-3, 30%) = {d30}"),
    )
}

fn core_size_anchors() -> Outcome {
    let n = 10_000;
    let cases = [
        (1000, ratio(1, 100), 224),
        (1000, ratio(1, 1000), 274),
        (5000, ratio(1, 1000), 369),
    ];
    let mut pass = true;
    let mut got = Vec::new();
    for (alpha, eps, expected) in cases {
        let target = TuningTarget::from_epsilon(eps).expect("target");
        let q = min_core_size::<f64>(n, alpha, &target, NumericMode::auto(n))
            .expect("core size")
            .q;
        pass &= q == expected;
        got.push(q.to_string());
    }
    Outcome::new(pass, format!("q = {}", got.join(", ")))
}

fn mode_agreement() -> Outcome {
    let mut rng = trial_rng(0x5eed, 4);
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0, 0);
    for _ in 0..500 {
        let n = rng.random_range(1..=500u64);
        let q = rng.random_range(0..=n);
        let alpha = rng.random_range(0..=n);
        let exact = miss_probability::<f64>(n, alpha, q, NumericMode::Exact).expect("exact");
        let log = miss_probability::<f64>(n, alpha, q, NumericMode::LogSpace).expect("log");
        let gap = rel_gap(exact.ln_epsilon(), log.ln_epsilon());
        if gap > worst {
            worst = gap;
            worst_at = (n, q, alpha);
        }
    }
    Outcome::new(
        worst <= 1e-10,
        format!("500 triples, worst relative gap {worst:.3e} at (n, q, alpha) = {worst_at:?}"),
    )
}

fn brute_force_oracle() -> Outcome {
    let mut checked = 0;
    for n in 1..=10u32 {
        let table = enumerate_miss_probabilities(n);
        for q in 0..=n as u64 {
            for alpha in 0..=n as u64 {
                let exact = miss_probability_exact(n as u64, alpha, q).expect("exact");
                if exact != table[q as usize][alpha as usize] {
                    return Outcome::new(
                        false,
                        format!(
                            "(n, q, alpha) = ({n}, {q}, {alpha}): formula {exact}, enumeration {}",
                            table[q as usize][alpha as usize]
                        ),
                    );
                }
                checked += 1;
            }
        }
    }
    Outcome::new(
        true,
        format!("{checked} (n, q, alpha) triples with n <= 10 match exactly"),
    )
}

fn decomposition_identity() -> Outcome {
    let mut checked = 0;
    for n in 1..=60u64 {
        for q in 0..=n {
            for alpha in 0..=n {
                let mut sum = ExactRational::zero();
                for k in support(n, q, alpha) {
                    sum += conditional_miss_exact(n, q, k).expect("conditional")
                        * hypergeometric_pmf_exact(n, q, alpha, k).expect("pmf");
                }
                if sum != miss_probability_exact(n, alpha, q).expect("exact") {
                    return Outcome::new(
                        false,
                        format!("mismatch at (n, q, alpha) = ({n}, {q}, {alpha})"),
                    );
                }
                checked += 1;
            }
        }
    }
    Outcome::new(true, format!("{checked} triples with n <= 60"))
}

fn urn_monte_carlo() -> Outcome {
    let config = TrialConfig {
        n: 1000,
        q: 79,
        trials: 1_000_000,
        model: Model::Urn { alpha: 300 },
        seed: 0,
    };
    let start = Instant::now();
    let cmp = compare_with_analytic(&config).expect("simulation");
    let elapsed = start.elapsed();
    Outcome::new(
        cmp.ci_contains_analytic && elapsed <= Duration::from_secs(120),
        format!(
            "epsilon_hat = {:.6}, 99% interval [{:.6}, {:.6}], analytic {:.6}, z = {:.2}, {:.2?}",
            cmp.report.epsilon_hat,
            cmp.report.ci_low,
            cmp.report.ci_high,
            cmp.analytic_epsilon,
            cmp.z_score,
            elapsed
        ),
    )
}

fn survivor_check() -> Outcome {
    let config = TrialConfig {
        n: 1000,
        q: 79,
        trials: 10_000,
        model: Model::ChurnProcess {
            c: 1e-2,
            delta: 50,
            fractional: false,
        },
        seed: 0,
    };
    let report = run_churn_trials(&config).expect("simulation");
    let stats = report.survivors.expect("survivor stats");
    let se = report.survivor_fraction_stderr().expect("stderr");
    let expected = expected_survivor_fraction(&config).expect("expected fraction");
    let gap = (stats.initial_fraction_mean - expected).abs();
    Outcome::new(
        gap <= 3.0 * se,
        format!(
            "mean {:.6}, expected {:.6}, gap {:.2} standard errors",
            stats.initial_fraction_mean,
            expected,
            gap / se
        ),
    )
}

/// Named sub-check of the property suite.
struct Property {
    name: &'static str,
    failure: Option<String>,
}

fn monotonicity_exhaustive() -> Option<String> {
    for n in 1..=60u64 {
        let eps: Vec<Vec<ExactRational>> = (0..=n)
            .map(|q| {
                (0..=n)
                    .map(|a| miss_probability_exact(n, a, q).expect("exact"))
                    .collect()
            })
            .collect();
        for q in 0..n {
            for alpha in 0..n {
                if eps[q as usize + 1][alpha as usize] > eps[q as usize][alpha as usize] {
                    return Some(format!(
                        "epsilon rises with q at (n, q, alpha) = ({n}, {q}, {alpha})"
                    ));
                }
            }
        }
        for q in 1..=n {
            for alpha in 0..n {
                if eps[q as usize][alpha as usize + 1] < eps[q as usize][alpha as usize] {
                    return Some(format!(
                        "epsilon falls with alpha at (n, q, alpha) = ({n}, {q}, {alpha})"
                    ));
                }
            }
        }
    }
    None
}

fn monotonicity_sampled() -> Option<String> {
    let n = 10_000;
    let mut rng = trial_rng(0x5eed, 9);
    let eps = |alpha, q| {
        miss_probability::<f64>(n, alpha, q, NumericMode::LogSpace)
            .expect("log")
            .ln_epsilon()
    };
    // the log path carries ~1e-12 relative noise
    let tol = 1e-11;
    for _ in 0..300 {
        let alpha = rng.random_range(0..n - 1);
        let q = rng.random_range(1..n - 1);
        let here = eps(alpha, q);
        if here == f64::NEG_INFINITY {
            continue;
        }
        if eps(alpha, q + 1) > here + tol {
            return Some(format!(
                "epsilon rises with q at (alpha, q) = ({alpha}, {q})"
            ));
        }
        if eps(alpha + 1, q) < here - tol {
            return Some(format!(
                "epsilon falls with alpha at (alpha, q) = ({alpha}, {q})"
            ));
        }
    }
    None
}

fn pmf_normalization() -> Option<String> {
    for n in 1..=60u64 {
        for q in 0..=n {
            for alpha in 0..=n {
                let total: ExactRational = support(n, q, alpha)
                    .map(|k| hypergeometric_pmf_exact(n, q, alpha, k).expect("pmf"))
                    .sum();
                if !total.is_one() {
                    return Some(format!(
                        "pmf sums to {total} at (n, q, alpha) = ({n}, {q}, {alpha})"
                    ));
                }
            }
        }
    }
    None
}

fn pascal_symmetry() -> Option<String> {
    for m in 1..=200u64 {
        for r in 1..=m as i64 {
            if binomial_exact(m, r) != binomial_exact(m - 1, r - 1) + binomial_exact(m - 1, r) {
                return Some(format!("Pascal fails at C({m}, {r})"));
            }
            if binomial_exact(m, r) != binomial_exact(m, m as i64 - r) {
                return Some(format!("symmetry fails at C({m}, {r})"));
            }
        }
    }
    None
}

fn solver_witnesses() -> Option<String> {
    let targets = [ratio(1, 4), ratio(1, 10), ratio(1, 100)];
    for n in 1..=60u64 {
        for eps_max in &targets {
            let target = TuningTarget::from_epsilon(eps_max.clone()).expect("target");
            let mut previous = 0;
            for alpha in 0..=n {
                let scan = (1..=n)
                    .find(|&q| &miss_probability_exact(n, alpha, q).expect("exact") <= eps_max);
                let solved = min_core_size::<f64>(n, alpha, &target, NumericMode::Exact);
                match (scan, solved) {
                    (None, Err(_)) => previous = u64::MAX,
                    (Some(q), Ok(found)) => {
                        if found.q != q {
                            return Some(format!(
                                "min_core_size({n}, {alpha}, {eps_max}) = {} but scan gives {q}",
                                found.q
                            ));
                        }
                        if !found.epsilon.at_most(eps_max) || found.epsilon_before.at_most(eps_max)
                        {
                            return Some(format!(
                                "witness pair wrong at ({n}, {alpha}, {eps_max})"
                            ));
                        }
                        if q < previous && previous != u64::MAX {
                            return Some(format!(
                                "core size falls with alpha at ({n}, {alpha}, {eps_max})"
                            ));
                        }
                        previous = q;
                    }
                    (scan, solved) => {
                        return Some(format!(
                            "({n}, {alpha}, {eps_max}): scan {scan:?}, solver {:?}",
                            solved.map(|f| f.q)
                        ));
                    }
                }
            }
        }
    }
    // larger bounds never need larger cores
    for alpha in [0, 100, 500, 900] {
        let sizes: Vec<u64> = targets
            .iter()
            .map(|e| {
                let target = TuningTarget::from_epsilon(e.clone()).expect("target");
                min_core_size::<f64>(1000, alpha, &target, NumericMode::Exact)
                    .map_or(u64::MAX, |f| f.q)
            })
            .collect();
        if sizes.windows(2).any(|w| w[0] > w[1]) {
            return Some(format!(
                "core size not monotone in epsilon at alpha = {alpha}: {sizes:?}"
            ));
        }
    }
    // delta witnesses: C(delta) within budget, C(delta + 1) beyond it
    let mut rng = trial_rng(0x5eed, 11);
    for _ in 0..2000 {
        let c = 10f64.powf(rng.random_range(-5.0..-0.3));
        let budget = rng.random_range(0.01..0.99);
        let delta = delta_for_churn(c, budget).expect("delta");
        let slack = 1.0 + 64.0 * f64::EPSILON;
        let at = churn_ratio(c, delta).expect("ratio");
        let next = churn_ratio(c, delta + 1).expect("ratio");
        if at > budget * slack || next <= budget {
            return Some(format!(
                "delta witness wrong for (c, C) = ({c}, {budget}): delta {delta}"
            ));
        }
    }
    // max_delta witnesses
    for (n, q, c, eps) in [
        (10_000u64, 274u64, 1e-3, ratio(1, 1000)),
        (1000, 79, 1e-3, ratio(1, 100)),
        (1000, 150, 5e-3, ratio(1, 100)),
    ] {
        let target = TuningTarget::from_epsilon(eps.clone()).expect("target");
        let mode = NumericMode::auto(n);
        match max_delta::<f64>(n, q, c, &target, mode, 10_000_000) {
            Ok(Lifetime::Bounded {
                delta,
                alpha,
                alpha_next,
                ..
            }) => {
                let a = replaced_count(n, churn_ratio(c, delta).expect("ratio")).expect("alpha");
                let b =
                    replaced_count(n, churn_ratio(c, delta + 1).expect("ratio")).expect("alpha");
                let ok_here = miss_probability::<f64>(n, a, q, mode)
                    .expect("eps")
                    .at_most(&eps);
                let ok_next = miss_probability::<f64>(n, b, q, mode)
                    .expect("eps")
                    .at_most(&eps);
                if a != alpha || b != alpha_next || !ok_here || ok_next {
                    return Some(format!(
                        "max_delta witness wrong at (n, q, c) = ({n}, {q}, {c})"
                    ));
                }
            }
            other => return Some(format!("max_delta({n}, {q}, {c}) = {other:?}")),
        }
    }
    None
}

/// c <-> C <-> delta round trips over c in [1e-5, 0.5] and delta in [1, 1e4].
fn round_trips() -> Option<String> {
    let cs: Vec<f64> = (0..=40)
        .map(|i| 10f64.powf(-5.0 + i as f64 * (0.5f64.log10() + 5.0) / 40.0))
        .collect();
    let deltas: Vec<u64> = (0..=40)
        .map(|i| 10f64.powf(i as f64 / 10.0).round() as u64)
        .collect();
    let mut rate_failures = Vec::new();
    let mut delta_failures = Vec::new();
    let mut total = 0;
    for &c in &cs {
        for &delta in &deltas {
            total += 1;
            let ratio = churn_ratio(c, delta).expect("ratio");
            match churn_rate_for(ratio, delta) {
                Ok(back) if (back - c).abs() <= 1e-12 => {}
                back => rate_failures.push((c, delta, ratio, back.ok())),
            }
            let recovered =
                churn_rate_for(ratio, delta).and_then(|rate| delta_for_churn(rate, ratio));
            if recovered != Ok(delta) {
                delta_failures.push((c, delta, ratio, recovered.ok()));
            }
        }
    }
    if rate_failures.is_empty() && delta_failures.is_empty() {
        return None;
    }
    // range of 1 - C over a failure list
    fn span(gaps: impl Iterator<Item = f64>) -> (f64, f64) {
        gaps.fold((f64::INFINITY, 0.0f64), |(lo, hi), g| {
            (lo.min(g), hi.max(g))
        })
    }
    let mut msg = format!(
        "{} of {total} grid points miss c within 1e-12, {} miss delta",
        rate_failures.len(),
        delta_failures.len()
    );
    if let Some(&(c, delta, ratio, back)) = rate_failures.first() {
        let (lo, hi) = span(rate_failures.iter().map(|f| 1.0 - f.2));
        msg.push_str(&format!(
            "; failing points have 1 - C in [{lo:.1e}, {hi:.1e}], first at c = {c:.3e}, delta = {delta}: C = {ratio:?}, recovered c = {back:?}"
        ));
    }
    if !delta_failures.is_empty() {
        let (lo, hi) = span(delta_failures.iter().map(|f| 1.0 - f.2));
        msg.push_str(&format!(
            "; delta failures have 1 - C in [{lo:.1e}, {hi:.1e}]"
        ));
    }
    Some(msg)
}

fn property_suites() -> Outcome {
    let props = [
        Property {
            name: "monotonicity, n <= 60",
            failure: monotonicity_exhaustive(),
        },
        Property {
            name: "monotonicity, n = 1e4 sampled",
            failure: monotonicity_sampled(),
        },
        Property {
            name: "pmf normalization",
            failure: pmf_normalization(),
        },
        Property {
            name: "Pascal and symmetry",
            failure: pascal_symmetry(),
        },
        Property {
            name: "solver witnesses",
            failure: solver_witnesses(),
        },
        Property {
            name: "c/C/delta round trips",
            failure: round_trips(),
        },
    ];
    let pass = props.iter().all(|p| p.failure.is_none());
    let detail = props
        .iter()
        .map(|p| match &p.failure {
            None => format!("\n        ok    {}", p.name),
            Some(why) => format!("\n        FAIL  {}: {why}", p.name),
        })
        .collect::<String>();
    Outcome::new(pass, detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("core size table", table_reproduction),
        ("probe period anchors", delta_anchors),
        ("core size anchors", core_size_anchors),
        ("exact/logspace agreement", mode_agreement),
        ("brute-force enumeration", brute_force_oracle),
        ("decomposition identity", decomposition_identity),
        ("urn Monte Carlo", urn_monte_carlo),
        ("survivor fraction", survivor_check),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{status}  {}. {name} [{:.2?}]: {}",
            i + 1,
            start.elapsed(),
            outcome.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
