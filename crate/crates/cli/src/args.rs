use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use persistlab_core::{DistributionSpec, Order, Strictness};

#[derive(Debug, Parser)]
#[command(
    name = "persistlab",
    version,
    about = "Persistence probabilities of random walks and their iterated sums"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Rademacher persistence tables.
    Exact(ExactArgs),
    /// Monte Carlo persistence or E|S_n| estimates.
    Mc(McArgs),
    /// Power-law exponent fit of persistence estimates.
    Fit(FitArgs),
    /// Convolution and two-sided bounds relating p_n to E|S_n|.
    Bounds(BoundsArgs),
    /// Grid check of the lower-tail decay condition.
    Decay(DecayArgs),
    /// Integrated Brownian motion persistence sweep.
    Ibm(IbmArgs),
    /// Run the acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Print JSON-lines records on stdout instead of text.
    #[arg(long)]
    pub json: bool,
    /// Append JSON-lines records to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write plot-ready CSV to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Sampling {
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, env = "PERSISTLAB_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, env = "PERSISTLAB_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Upper limit on paths * n.
    #[arg(long, default_value_t = persistlab_core::montecarlo::DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::One => Order::One,
            OrderArg::Two => Order::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrictnessArg {
    Strict,
    Weak,
}

impl From<StrictnessArg> for Strictness {
    fn from(s: StrictnessArg) -> Self {
        match s {
            StrictnessArg::Strict => Strictness::Strict,
            StrictnessArg::Weak => Strictness::Weak,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Statistic {
    Persistence,
    MeanAbs,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub order: OrderArg,
    /// Largest n in the table.
    #[arg(long)]
    pub n: usize,
    /// Write the table as JSON to this file.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long = "dist")]
    pub dist: DistributionSpec,
    #[arg(long, value_enum, default_value = "2")]
    pub order: OrderArg,
    /// Horizons: `8`, `4,16,64`, or `a..b` for a, 2a, 4a, ... up to b.
    #[arg(long, value_parser = parse_n_list)]
    pub n: NList,
    /// Threshold y >= 0.
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, value_enum, default_value = "strict")]
    pub strictness: StrictnessArg,
    #[arg(long, value_enum, default_value = "persistence")]
    pub stat: Statistic,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// JSON-lines file of records (or bare estimates) from `mc`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct DecayOverride {
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "dist")]
    pub dist: DistributionSpec,
    /// Use exact tables (Rademacher only) and check every n up to the
    /// largest requested.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_parser = parse_n_list)]
    pub n: NList,
    #[command(flatten)]
    pub decay: DecayOverride,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long = "dist")]
    pub dist: DistributionSpec,
    #[command(flatten)]
    pub decay: DecayOverride,
    #[arg(long, default_value_t = 0.01)]
    pub lo: f64,
    #[arg(long, default_value_t = 20.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Evenly spaced axis instead of logarithmic.
    #[arg(long)]
    pub linear: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct IbmArgs {
    /// Horizons T, comma separated.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [16.0, 64.0, 256.0, 1024.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Criteria to run, e.g. `1,2,12`; all by default.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long, env = "PERSISTLAB_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, env = "PERSISTLAB_WORKERS", default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

pub fn parse_n_list(s: &str) -> Result<NList, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad n `{t}`: {e}"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a == 0 || b < a {
            return Err(format!("range `{s}` needs 1 <= a <= b"));
        }
        let mut out = vec![];
        let mut n = a;
        while n <= b {
            out.push(n);
            n *= 2;
        }
        return Ok(NList(out));
    }
    let ns: Vec<usize> = s.split(',').map(num).collect::<Result<_, _>>()?;
    if ns.is_empty() {
        return Err("empty n list".into());
    }
    Ok(NList(ns))
}
