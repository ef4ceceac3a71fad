//! `qmetro`: QFI values, metrology bounds and figure tables for noisy phase
//! estimation.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmetro_core::{BoundScheme, ChannelModel, Error, Method, Scheme};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "qmetro",
    version,
    about = "Quantum Fisher information and precision bounds for noisy phase estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal QFI (or a formula ceiling) for one scheme.
    Qfi(QfiArgs),
    /// Kraus-representation bounds.
    Bound(BoundArgs),
    /// Ratio of the asymptotic parallel bound to the sequential optimum.
    Fig3(Fig3Args),
    /// Amplitude-damping table: scheme (ii), scheme (iii) and the two bound lines.
    Fig4(Fig4Args),
}

#[derive(Args, Clone, Serialize)]
pub struct EtaArgs {
    /// Noise parameter in (0, 1].
    #[arg(long, conflicts_with_all = ["eta_min", "eta_max", "points"])]
    pub eta: Option<f64>,
    /// Lower end of an evenly spaced grid (inclusive).
    #[arg(long, requires_all = ["eta_max", "points"])]
    pub eta_min: Option<f64>,
    /// Upper end of an evenly spaced grid (inclusive).
    #[arg(long, requires_all = ["eta_min", "points"])]
    pub eta_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, requires_all = ["eta_min", "eta_max"])]
    pub points: Option<usize>,
}

#[derive(Args, Clone, Serialize)]
pub struct RangeArgs {
    /// Number of channel uses.
    #[arg(long = "n", conflicts_with = "n_max")]
    pub n: Option<usize>,
    /// Evaluate every N from 1 to this value.
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Args, Clone, Serialize)]
pub struct SolverArgs {
    /// See-saw restarts.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Relative tolerance (see-saw stall test and Kraus minimisation).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Zero Kraus operators appended before Kraus minimisation.
    #[arg(long, default_value_t = 0)]
    pub pad: usize,
    /// Random seed for see-saw starting points.
    #[arg(long, env = "QMETRO_SEED", default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Serialize)]
pub struct QfiArgs {
    #[arg(long)]
    #[serde(serialize_with = "display")]
    pub model: ChannelModel,
    #[command(flatten)]
    #[serde(flatten)]
    pub eta: EtaArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub range: RangeArgs,
    /// One of i, ii, iii, iv-bound, knysh, universal.
    #[arg(long, default_value = "ii")]
    #[serde(serialize_with = "display")]
    pub scheme: Scheme,
    /// closed-form, seesaw, kraus-min or formula; defaults per scheme.
    #[arg(long)]
    #[serde(serialize_with = "display_opt")]
    pub method: Option<Method>,
    /// Ancilla dimension for scheme iii see-saws.
    #[arg(long)]
    pub ancilla: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    #[serde(serialize_with = "display")]
    pub model: ChannelModel,
    #[command(flatten)]
    #[serde(flatten)]
    pub eta: EtaArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub range: RangeArgs,
    /// One of asymptotic-beta0, finite-par, finite-adaptive, extended-exact, simulation.
    #[arg(long, default_value = "asymptotic-beta0")]
    #[serde(serialize_with = "display")]
    pub scheme: BoundScheme,
    /// JSON file with `rho` and `rho_dot` (rows of [re, im] pairs) for the simulation scheme.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct Fig3Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub eta: EtaArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Serialize)]
pub struct Fig4Args {
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_opt<T: std::fmt::Display, S: serde::Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Usage(String),
    NotConverged(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Resource(_)) => 3,
            Failure::Core(Error::Numeric(_)) | Failure::NotConverged(_) => 4,
            Failure::Core(_) | Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Qfi(a) => run::qfi(a),
        Command::Bound(a) => run::bound(a),
        Command::Fig3(a) => run::fig3(a),
        Command::Fig4(a) => run::fig4(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmetro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
