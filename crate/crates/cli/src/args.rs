use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mlfg", version, about = "Nash equilibria of quadratic multi-leader-follower games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the smoothing continuation and certify the result.
    Solve(SolveArgs),
    /// Certify a candidate strategy vector.
    Verify(VerifyArgs),
    /// Compare inner methods with and without the Taylor predictor.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct GameSource {
    /// Game description in JSON.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// One of the bundled datasets.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub dataset: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Newton,
    Subgradient,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Subgradient => "subgradient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: GameSource,
    #[arg(long, value_enum, default_value_t = Method::Newton)]
    pub method: Method,
    #[arg(long, default_value_t = 1.6)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_min: f64,
    /// Inner stopping tolerance on the merit function.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub taylor: Switch,
    /// Exponent of the smoothing family (even, at least 2).
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Start from a random point instead of the origin.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nash gap tolerance of the certificate.
    #[arg(long, default_value_t = 1e-5)]
    pub cert_tol: f64,
    /// S-stationarity residual tolerance of the certificate.
    #[arg(long, default_value_t = 1e-6)]
    pub stat_tol: f64,
    /// Report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: GameSource,
    /// JSON array, or an object with "x" and optional "lambda" (a solve report works).
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub stat_tol: f64,
    /// Smoothing parameter used to recover the limit derivative.
    #[arg(long, default_value_t = 1e-6)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 2)]
    pub p: u32,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub dataset: u8,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Comparison CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the multi-start table (random starts at a fixed eps).
    #[arg(long)]
    pub multistart: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 0.5)]
    pub multistart_eps: f64,
    /// Inner tolerance of the multi-start solves.
    #[arg(long, default_value_t = 1e-14)]
    pub multistart_tol: f64,
}
