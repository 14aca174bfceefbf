//! `trapwalk`: command-line driver for environments, survival values, the
//! phase diagram, the one-dimensional limit-law experiment and the
//! validation suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "trapwalk",
    version,
    about = "Random walks among Bernoulli hard obstacles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample an obstacle environment on the box [-radius, radius]^dim.
    ///
    /// Output: `#` header lines, then `dim radius density seed`, then the
    /// occupancy bits as hex.
    Env(EnvArgs),
    /// Survival probabilities over a list of times.
    ///
    /// CSV columns: t,value,error,mode. `error` is the half-width of the
    /// reported bracket (exact and series modes), or the standard error
    /// (annealed-mc).
    Survival(SurvivalArgs),
    /// Phase diagram: 1/ā(γ) with the case labels.
    ///
    /// CSV columns: gamma,abar,inv_abar,cases. The SVG plots 1/ā(γ) with
    /// markers at γ1 and γ2.
    Phase(PhaseArgs),
    /// Normalized gap sums against their infinitely divisible limit (d = 1).
    ///
    /// Samples CSV: t,bracket,index,value. CF CSV:
    /// t,u,ecf_re,ecf_im,exact_re,exact_im,limit_re,limit_im,ecf_dist,exact_dist.
    Limitlaw(LimitArgs),
    /// Run the invariant checks; exit status 1 if any fails.
    ///
    /// Report columns: module,check,status,seconds,detail.
    Validate(ValidateArgs),
    /// Closed-form spectrum of an interval of `length` free sites.
    ///
    /// CSV columns: n,lambda,mass.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug)]
struct EnvArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    radius: usize,
    /// Obstacle density in [0, 1).
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SurvivalMode {
    Quenched,
    Averaged,
    AnnealedExact,
    AnnealedMc,
}

impl SurvivalMode {
    fn name(self) -> &'static str {
        match self {
            SurvivalMode::Quenched => "quenched",
            SurvivalMode::Averaged => "averaged",
            SurvivalMode::AnnealedExact => "annealed-exact",
            SurvivalMode::AnnealedMc => "annealed-mc",
        }
    }
}

#[derive(Args, Debug)]
struct SurvivalArgs {
    #[arg(long, value_enum)]
    mode: SurvivalMode,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Environment file from `trapwalk env`; otherwise one is sampled from
    /// --dim --radius --p --seed.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    radius: usize,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Starting site for quenched mode, comma-separated (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<i64>>,
    /// Box radius L for averaged mode.
    #[arg(long, default_value_t = 0)]
    scale: usize,
    /// Walks for annealed-mc.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    walks: u64,
    /// Tail tolerance for annealed-exact.
    #[arg(long, default_value_t = 1e-12)]
    tail_tol: f64,
    /// annealed-mc in d = 1: fail (exit 1) unless within 3 standard errors
    /// of the exact series.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.05)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1.2)]
    gamma_max: f64,
    #[arg(long, default_value_t = 231)]
    steps: usize,
    /// CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Comma-separated times; defaults to the last time of each bracket in
    /// --brackets.
    #[arg(long, value_delimiter = ',')]
    t_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_values_t = [10i64, 15, 20])]
    brackets: Vec<i64>,
    /// Draws per time.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    n_envs: u64,
    /// Subtract n(t) E[Y]; required when gamma > 2/3.
    #[arg(long)]
    centered: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest |u| on the CF grid.
    #[arg(long, default_value_t = 5.0)]
    u_max: f64,
    #[arg(long, default_value_t = 201)]
    u_points: usize,
    #[arg(long)]
    samples_out: Option<PathBuf>,
    #[arg(long)]
    cf_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Only run checks of this module.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    length: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Env(a) => commands::env(a),
        Command::Survival(a) => commands::survival(a),
        Command::Phase(a) => commands::phase(a),
        Command::Limitlaw(a) => commands::limitlaw(a),
        Command::Validate(a) => commands::validate(a),
        Command::Spectrum(a) => commands::spectrum(a),
    };
    match res {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
