//! Command-line front end: argument definitions, commands and renderers.

pub mod commands;
pub mod render;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use crate::commands::CliError;
use crate::render::Format;

const CHURN_HELP: &str = "\
Churn can be given in one of three forms:
  --alpha A            replaced initial nodes as a count
  --C RATIO            fraction of initial nodes replaced; \"30%\", \"0.3\" or \"static\" (= 0)
  --c RATE --delta D   per-unit replacement rate and number of time units

Fractions accept either a percentage (\"30%\") or a plain fraction (\"0.3\").
Both are parsed as exact decimals. The replaced count is alpha = ceil(C * n),
taken exactly for --C and from C = 1 - (1 - c)^delta for --c/--delta.";

const UNITS_HELP: &str = "\
Fractions accept either a percentage (\"30%\") or a plain fraction (\"0.3\"),
parsed as exact decimals. Time is counted in whole units. Replacements are
counted as alpha = ceil(C * n), where C = 1 - (1 - c)^delta for a per-unit
rate c.";

#[derive(Debug, Parser)]
#[command(
    name = "churnprobe",
    version,
    about = "Probe/core intersection probabilities under churn"
)]
pub struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV (LF line endings, no quoting) instead of text.
    #[arg(long, global = true)]
    csv: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Miss probability epsilon and hit probability p = 1 - epsilon.
    #[command(after_help = CHURN_HELP)]
    Prob(ProbArgs),
    /// Smallest core size meeting a target miss probability.
    #[command(after_help = CHURN_HELP)]
    Size(SizeArgs),
    /// Longest observation span, either for a churn budget (--c with --C) or
    /// for a core (--c with --n, --q and --epsilon/--p).
    #[command(after_help = UNITS_HELP)]
    Lifetime(LifetimeArgs),
    /// Per-unit rate that replaces a fraction C of the initial nodes in delta
    /// units: c = 1 - (1 - C)^(1/delta).
    #[command(visible_alias = "churn-rate", after_help = UNITS_HELP)]
    Churn(ChurnRateArgs),
    /// Grid of minimal core sizes over populations, hit probabilities and
    /// churn ratios. Defaults reproduce the classic 30-cell table.
    #[command(after_help = UNITS_HELP)]
    Table(TableArgs),
    /// One CSV row per point of a one-dimensional parameter sweep.
    #[command(after_help = SWEEP_HELP)]
    Sweep(SweepArgs),
    /// Monte Carlo estimate of the miss probability, scored against the
    /// closed form.
    #[command(after_help = UNITS_HELP)]
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ModeArg {
    /// Exact for n <= 2000, log-space above.
    #[default]
    Auto,
    Exact,
    Logspace,
}

/// One of --alpha, --C, or --c with --delta.
#[derive(Debug, Clone, Default, Args)]
pub struct ChurnArgs {
    /// Replaced initial nodes (alpha), a count in [0, n].
    #[arg(long)]
    pub alpha: Option<u64>,

    /// Fraction of initial nodes replaced: "30%", "0.3" or "static".
    /// alpha = ceil(C * n) is computed exactly from the decimal.
    #[arg(long = "C", value_name = "RATIO")]
    pub ratio: Option<String>,

    /// Per-unit replacement rate c in [0, 1) as "0.001" or "0.1%";
    /// requires --delta.
    #[arg(long = "c", value_name = "RATE")]
    pub rate: Option<String>,

    /// Observation span in whole time units; used with --c.
    #[arg(long)]
    pub delta: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    /// Population size.
    #[arg(long)]
    pub n: u64,
    /// Core size, also the number of probes.
    #[arg(long)]
    pub q: u64,
    #[command(flatten)]
    pub churn: ChurnArgs,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
}

/// Target as a miss probability or as a hit probability.
#[derive(Debug, Clone, Default, Args)]
pub struct TargetArgs {
    /// Largest tolerated miss probability, e.g. "0.001" or "0.1%".
    #[arg(long, conflicts_with = "p")]
    pub epsilon: Option<String>,
    /// Required hit probability p = 1 - epsilon, e.g. "99.9%" or "0.999".
    #[arg(long)]
    pub p: Option<String>,
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    /// Population size.
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub churn: ChurnArgs,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct LifetimeArgs {
    /// Per-unit replacement rate c, as "0.001" or "0.1%".
    #[arg(long = "c", value_name = "RATE")]
    pub rate: String,
    /// Tolerated fraction of initial nodes replaced, as "10%" or "0.1".
    #[arg(long = "C", value_name = "RATIO", conflicts_with_all = ["n", "q"])]
    pub ratio: Option<String>,
    /// Population size (core mode).
    #[arg(long, requires = "q")]
    pub n: Option<u64>,
    /// Core size (core mode).
    #[arg(long, requires = "n")]
    pub q: Option<u64>,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Search cap in time units (core mode).
    #[arg(long, default_value_t = churnprobe::DEFAULT_HORIZON)]
    pub horizon: u64,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct ChurnRateArgs {
    /// Fraction of initial nodes replaced, as "10%" or "0.1".
    #[arg(long = "C", value_name = "RATIO")]
    pub ratio: String,
    /// Number of time units, at least 1.
    #[arg(long)]
    pub delta: u64,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Population sizes.
    #[arg(long = "n", value_delimiter = ',', default_values_t = [1_000u64, 10_000, 100_000])]
    pub n_list: Vec<u64>,
    /// Required hit probabilities, as percentages or fractions.
    #[arg(long = "p", value_delimiter = ',', default_values = ["99%", "99.9%"])]
    pub p_list: Vec<String>,
    /// Churn ratios C ("static" means no replacement).
    #[arg(long = "C", value_delimiter = ',', default_values = ["static", "10%", "30%", "60%", "80%"])]
    pub ratio_list: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
}

const SWEEP_HELP: &str = "\
Columns: variable,C,alpha,q,epsilon,p (NA where a value is not defined).
Sweeping q needs --n and a churn form; delta needs --c (plus --n/--q for
epsilon); c needs --delta (plus --n/--q); C needs --n/--q; epsilon needs --n
and a churn form and reports the minimal q.
Fractions accept \"30%\" or \"0.3\"; alpha = ceil(C * n).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Q,
    Delta,
    #[value(name = "c")]
    Rate,
    #[value(name = "C")]
    Ratio,
    Epsilon,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept parameter.
    #[arg(long = "var", value_enum)]
    pub variable: SweepVar,
    /// Inclusive range START:STOP:STEP.
    #[arg(long, conflicts_with = "values", required_unless_present = "values")]
    pub range: Option<String>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<String>>,
    /// Population size.
    #[arg(long)]
    pub n: Option<u64>,
    /// Core size.
    #[arg(long)]
    pub q: Option<u64>,
    #[command(flatten)]
    pub churn: ChurnArgs,
    #[arg(long, value_enum, default_value_t)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Population size.
    #[arg(long)]
    pub n: u64,
    /// Core size, also the number of probes.
    #[arg(long)]
    pub q: u64,
    /// Number of independent trials.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Urn model: replace alpha uniformly chosen nodes at once.
    #[arg(long, conflicts_with_all = ["rate", "delta"], required_unless_present = "rate")]
    pub alpha: Option<u64>,
    /// Churn process: per-unit rate c; ceil(c * n) nodes leave every unit.
    #[arg(long = "c", value_name = "RATE", requires = "delta")]
    pub rate: Option<String>,
    /// Churn process: number of time units.
    #[arg(long, requires = "rate")]
    pub delta: Option<u64>,
    /// Churn process: replace c * n per unit on average, carrying the
    /// fractional remainder.
    #[arg(long, requires = "rate")]
    pub fractional: bool,
    /// Base seed; trial i uses stream i of the seeded generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "CHURNPROBE_THREADS")]
    pub threads: Option<usize>,
    /// Exit with status 4 when |z| exceeds 3.
    #[arg(long)]
    pub check: bool,
}

/// Runs a parsed command line and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Text
    };
    match cli.command {
        Command::Prob(args) => commands::prob(&args).map(|r| render::emit(&r, format)),
        Command::Size(args) => commands::size(&args).map(|r| render::emit(&r, format)),
        Command::Lifetime(args) => commands::lifetime(&args).map(|r| render::emit(&r, format)),
        Command::Churn(args) => commands::churn_rate(&args).map(|r| render::emit(&r, format)),
        Command::Table(args) => commands::table(&args).map(|r| render::emit(&r, format)),
        Command::Sweep(args) => {
            // sweeps are a CSV stream unless JSON is asked for
            let format = if cli.json { Format::Json } else { Format::Csv };
            commands::sweep(&args).map(|r| render::emit(&r, format))
        }
        Command::Simulate(args) => {
            if let Some(threads) = args.threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            let record = commands::simulate(&args)?;
            let out = render::emit(&record, format);
            if args.check && record.comparison.flagged {
                return Err(CliError::CheckFailed {
                    report: out,
                    z: record.comparison.z_score,
                });
            }
            Ok(out)
        }
    }
}

/// Parses `args` (program name first) and runs them.
pub fn run_args<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}
