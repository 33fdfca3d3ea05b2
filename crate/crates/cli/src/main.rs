//! Batch front-end for the queueing-tail library: parse a source
//! distribution and system parameters, run the requested analysis, and
//! emit a deterministic CSV or JSON artifact.
//!
//! Exit codes: 0 on success, 2 on configuration/input errors, 3 on
//! numerical failures — nothing else. Output is assembled fully in memory
//! and written in one step, so a failing run never leaves a partial file.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "tailpole",
    version,
    about = "Tail probabilities of a many-sources bulk-service queue: \
             exact, pole-based, and random-walk estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Locate the interior root cluster, exterior poles, and saddle point,
    /// with their closed-form seeds and seed errors
    Poles(PolesArgs),
    /// Tabulate P(Q > N) by the requested methods with relative errors
    /// against the exact oracle
    Tail(TailArgs),
    /// Sample the remainder contour and the modulus bound along it
    Contour(ContourArgs),
    /// Evaluate the limiting-walk maximum: zeta series vs the Spitzer
    /// oracle across a grid of drifts
    Grw(GrwArgs),
}

/// Output format of the artifact.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated values, full round-trip number formatting.
    Csv,
    /// The same rows as a JSON array (or object for structured artifacts).
    Json,
}

/// The queueing system under analysis.
#[derive(Args)]
pub struct SystemArgs {
    /// Path to the source-distribution JSON: {"pmf": [p0, p1, ...]} with an
    /// optional "name"
    #[arg(long)]
    pub dist: PathBuf,

    /// Number of independent sources
    #[arg(long)]
    pub n: u32,

    /// Service capacity per slot
    #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
    pub s: Option<u32>,

    /// Instead of --s: target walk drift; capacity is chosen to match it
    #[arg(long)]
    pub beta: Option<f64>,
}

/// Where and how to write the artifact.
#[derive(Args)]
pub struct OutputArgs {
    /// Artifact format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,

    /// Output path, or "-" for standard output
    #[arg(long, default_value = "-")]
    pub out: String,

    /// Worker threads: a count or "auto"; the TAILPOLE_THREADS environment
    /// variable, when set, overrides this flag
    #[arg(long, default_value = "auto")]
    pub threads: String,
}

#[derive(Args)]
pub struct PolesArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Exterior poles to locate: indices -k..=k
    #[arg(long = "k-max", default_value_t = 3)]
    pub k_max: u32,

    /// Emit the closed-form seeds themselves, ungraded by Newton polish
    #[arg(long)]
    pub seed_asymptotics_only: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Exterior poles available to the corrected series
    #[arg(long = "k-max", default_value_t = 3)]
    pub k_max: u32,

    /// Conjugate correction pairs in the corrected method (requires M ≤ k-max)
    #[arg(long = "m", default_value_t = 3)]
    pub m: u32,

    /// Tail levels: comma list and/or inclusive ranges, e.g. "0..5,10,20"
    #[arg(long = "n-list")]
    pub n_list: String,

    /// Comma subset of {exact, dpa, corrected, grw}, or "all"
    #[arg(long, default_value = "all")]
    pub methods: String,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ContourArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct GrwArgs {
    /// Drift grid, comma-separated positive values, e.g. "0.5,1,2,4"
    #[arg(long)]
    pub betas: String,

    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(run::RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(run::RunError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
