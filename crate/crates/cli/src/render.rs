//! Text, CSV and JSON rendering. Reals are printed with 17 significant
//! digits so every value reads back to the same `f64`.

use std::fmt::Write;

use serde::Serialize;

use crate::commands::{
    BudgetLifetime, ChurnRateRecord, CoreLifetime, Epsilon, LifetimeRecord, ProbRecord,
    SimulateRecord, SizeRecord, SweepRecord, SweepValue, TableRecord,
};
use churnprobe::{Model, NumericMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

pub trait Report: Serialize {
    fn text(&self) -> String;
    fn csv(&self) -> String;
}

pub fn emit<R: Report>(record: &R, format: Format) -> String {
    match format {
        Format::Text => record.text(),
        Format::Csv => record.csv(),
        Format::Json => json(record),
    }
}

/// Pretty JSON through `serde_json::Value`, so that parsing the output and
/// printing it again reproduces it byte for byte.
pub fn json<R: Serialize>(record: &R) -> String {
    let value = serde_json::to_value(record).expect("records serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values print");
    out.push('\n');
    out
}

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt<T>(value: Option<T>, f: impl FnOnce(T) -> String) -> String {
    value.map_or_else(|| "NA".to_string(), f)
}

fn mode_name(mode: NumericMode) -> &'static str {
    match mode {
        NumericMode::Exact => "exact",
        NumericMode::LogSpace => "logspace",
    }
}

fn lines(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn show_eps(e: &Epsilon) -> (String, String) {
    let eps = match &e.epsilon_exact {
        Some(r) => format!("{r} ({})", real(e.epsilon)),
        None => format!("{} (ln {})", real(e.epsilon), real(e.ln_epsilon)),
    };
    let p = match &e.p_exact {
        Some(r) => format!("{r} ({})", real(e.p)),
        None => real(e.p),
    };
    (eps, p)
}

impl Report for ProbRecord {
    fn text(&self) -> String {
        let (eps, p) = show_eps(&self.value);
        lines(&[
            ("n", self.n.to_string()),
            ("q", self.q.to_string()),
            ("alpha", self.alpha.to_string()),
            ("C", real(self.churn_ratio)),
            ("mode", mode_name(self.mode).into()),
            ("epsilon", eps),
            ("p", p),
        ])
    }

    fn csv(&self) -> String {
        let v = &self.value;
        format!(
            "n,q,alpha,C,mode,epsilon,p,ln_epsilon,epsilon_exact,p_exact\n{},{},{},{},{},{},{},{},{},{}\n",
            self.n,
            self.q,
            self.alpha,
            real(self.churn_ratio),
            mode_name(self.mode),
            real(v.epsilon),
            real(v.p),
            real(v.ln_epsilon),
            opt(v.epsilon_exact.clone(), |s| s),
            opt(v.p_exact.clone(), |s| s),
        )
    }
}

impl Report for SizeRecord {
    fn text(&self) -> String {
        let (eps, _) = show_eps(&self.at_q);
        let (before, _) = show_eps(&self.at_q_minus_1);
        lines(&[
            ("n", self.n.to_string()),
            ("alpha", self.alpha.to_string()),
            ("C", real(self.churn_ratio)),
            ("epsilon_max", self.epsilon_max.clone()),
            ("mode", mode_name(self.mode).into()),
            ("q", self.q.to_string()),
            ("epsilon(q)", eps),
            ("epsilon(q-1)", before),
        ])
    }

    fn csv(&self) -> String {
        format!(
            "n,alpha,C,epsilon_max,mode,q,epsilon,epsilon_before\n{},{},{},{},{},{},{},{}\n",
            self.n,
            self.alpha,
            real(self.churn_ratio),
            self.epsilon_max,
            mode_name(self.mode),
            self.q,
            real(self.at_q.epsilon),
            real(self.at_q_minus_1.epsilon),
        )
    }
}

impl Report for LifetimeRecord {
    fn text(&self) -> String {
        match self {
            LifetimeRecord::Budget(b) => budget_text(b),
            LifetimeRecord::Core(c) => core_text(c),
        }
    }

    fn csv(&self) -> String {
        match self {
            LifetimeRecord::Budget(b) => format!(
                "c,C_max,delta,C_at_delta,C_at_next\n{},{},{},{},{}\n",
                real(b.c),
                b.churn_ratio_max,
                b.delta,
                real(b.churn_ratio_at_delta),
                real(b.churn_ratio_at_next),
            ),
            LifetimeRecord::Core(c) => format!(
                "n,q,c,epsilon_max,mode,bounded,delta,horizon,alpha,epsilon,alpha_next,epsilon_next\n\
                 {},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.n,
                c.q,
                real(c.c),
                c.epsilon_max,
                mode_name(c.mode),
                c.bounded,
                opt(c.delta, |d| d.to_string()),
                c.horizon,
                c.alpha,
                real(c.at_delta.epsilon),
                opt(c.alpha_next, |a| a.to_string()),
                opt(c.at_next.as_ref(), |e| real(e.epsilon)),
            ),
        }
    }
}

fn budget_text(b: &BudgetLifetime) -> String {
    lines(&[
        ("c", real(b.c)),
        ("C_max", b.churn_ratio_max.clone()),
        ("delta", b.delta.to_string()),
        ("C(delta)", real(b.churn_ratio_at_delta)),
        ("C(delta+1)", real(b.churn_ratio_at_next)),
    ])
}

fn core_text(c: &CoreLifetime) -> String {
    let mut pairs = vec![
        ("n", c.n.to_string()),
        ("q", c.q.to_string()),
        ("c", real(c.c)),
        ("epsilon_max", c.epsilon_max.clone()),
        ("mode", mode_name(c.mode).into()),
    ];
    match (c.delta, c.alpha_next, &c.at_next) {
        (Some(delta), Some(alpha_next), Some(next)) => {
            pairs.push(("delta", delta.to_string()));
            pairs.push(("alpha(delta)", c.alpha.to_string()));
            pairs.push(("epsilon(delta)", show_eps(&c.at_delta).0));
            pairs.push(("alpha(delta+1)", alpha_next.to_string()));
            pairs.push(("epsilon(delta+1)", show_eps(next).0));
        }
        _ => {
            pairs.push((
                "delta",
                format!("unbounded (holds at horizon {})", c.horizon),
            ));
            pairs.push(("alpha(horizon)", c.alpha.to_string()));
            pairs.push(("epsilon(horizon)", show_eps(&c.at_delta).0));
        }
    }
    lines(&pairs)
}

impl Report for ChurnRateRecord {
    fn text(&self) -> String {
        lines(&[
            ("C", self.churn_ratio.clone()),
            ("delta", self.delta.to_string()),
            ("c", real(self.c)),
        ])
    }

    fn csv(&self) -> String {
        format!(
            "C,delta,c\n{},{},{}\n",
            self.churn_ratio,
            self.delta,
            real(self.c)
        )
    }
}

impl Report for TableRecord {
    /// Markdown grid with one row per (p, C) and one column per n.
    fn text(&self) -> String {
        let mut out = String::from("| p | C |");
        for n in &self.n {
            let _ = write!(out, " n={n} |");
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---:|".repeat(self.n.len()));
        out.push('\n');
        for row in self.cells.chunks(self.n.len().max(1)) {
            let _ = write!(out, "| {} | {} |", row[0].p, row[0].churn_ratio);
            for cell in row {
                let _ = write!(out, " {} |", cell.q);
            }
            out.push('\n');
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("p,C,n,alpha,mode,q,epsilon,epsilon_before\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.p,
                c.churn_ratio,
                c.n,
                c.alpha,
                mode_name(c.mode),
                c.q,
                real(c.epsilon),
                real(c.epsilon_before),
            );
        }
        out
    }
}

impl Report for SweepRecord {
    fn text(&self) -> String {
        self.csv()
    }

    fn csv(&self) -> String {
        let mut out = String::from("variable,C,alpha,q,epsilon,p\n");
        for r in &self.rows {
            let variable = match r.variable {
                SweepValue::Count(v) => v.to_string(),
                SweepValue::Real(v) => real(v),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                variable,
                opt(r.churn_ratio, real),
                opt(r.alpha, |a| a.to_string()),
                opt(r.q, |q| q.to_string()),
                opt(r.epsilon, real),
                opt(r.p, real),
            );
        }
        out
    }
}

impl Report for SimulateRecord {
    fn text(&self) -> String {
        let cfg = &self.config;
        let cmp = &self.comparison;
        let model = match cfg.model {
            Model::Urn { alpha } => format!("urn (alpha = {alpha})"),
            Model::ChurnProcess {
                c,
                delta,
                fractional,
            } => format!(
                "churn process (c = {}, delta = {delta}{})",
                real(c),
                if fractional { ", fractional" } else { "" }
            ),
        };
        let mut pairs = vec![
            ("model", model),
            ("n", cfg.n.to_string()),
            ("q", cfg.q.to_string()),
            ("seed", cfg.seed.to_string()),
            ("trials", cmp.report.trials.to_string()),
            ("misses", cmp.report.misses.to_string()),
            ("epsilon_hat", real(cmp.report.epsilon_hat)),
            (
                "99% interval",
                format!(
                    "[{}, {}]",
                    real(cmp.report.ci_low),
                    real(cmp.report.ci_high)
                ),
            ),
            ("alpha", cmp.alpha.to_string()),
            ("epsilon", real(cmp.analytic_epsilon)),
            ("z", real(cmp.z_score)),
            ("flagged", cmp.flagged.to_string()),
        ];
        if let Some(s) = cmp.report.survivors {
            pairs.push((
                "core survivors",
                format!("{} ± {}", real(s.core_mean), real(s.core_stddev)),
            ));
            pairs.push((
                "initial fraction",
                format!(
                    "{} ± {}",
                    real(s.initial_fraction_mean),
                    real(s.initial_fraction_stddev)
                ),
            ));
        }
        if let Some(expected) = self.expected_survivor_fraction {
            pairs.push(("expected fraction", real(expected)));
        }
        lines(&pairs)
    }

    fn csv(&self) -> String {
        let cmp = &self.comparison;
        let cfg = &self.config;
        format!(
            "n,q,seed,trials,misses,epsilon_hat,ci_low,ci_high,alpha,epsilon,z,flagged\n\
             {},{},{},{},{},{},{},{},{},{},{},{}\n",
            cfg.n,
            cfg.q,
            cfg.seed,
            cmp.report.trials,
            cmp.report.misses,
            real(cmp.report.epsilon_hat),
            real(cmp.report.ci_low),
            real(cmp.report.ci_high),
            cmp.alpha,
            real(cmp.analytic_epsilon),
            real(cmp.z_score),
            cmp.flagged,
        )
    }
}
