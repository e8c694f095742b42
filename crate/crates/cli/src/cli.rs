use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ModelKind, SweepVariable};

/// Strong-coupling quantum thermodynamics experiments.
#[derive(Debug, Parser)]
#[command(name = "qthermo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the verification suite and print one CHECK line per identity.
    Selfcheck(ParamArgs),
    /// Strong- and weak-coupling thermodynamics along one protocol.
    Timeseries(ParamArgs),
    /// Maximal strong/weak differences across a parameter sweep.
    Sweep(ParamArgs),
    /// Forward and reverse work distributions with Crooks and Jarzynski summaries.
    Fluctuation(ParamArgs),
}

impl Command {
    pub fn args(&self) -> &ParamArgs {
        match self {
            Command::Selfcheck(a) | Command::Timeseries(a) | Command::Sweep(a) | Command::Fluctuation(a) => a,
        }
    }
}

/// Flags override keys from `--config`.
#[derive(Debug, Args, Default, Clone)]
pub struct ParamArgs {
    /// TOML run file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Time steps over the protocol.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Sweep points evaluated concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Bath frequency (transverse field of the spin bath, mode frequency of the oscillator bath).
    #[arg(long, allow_negative_numbers = true)]
    pub omega_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_z0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_z: Option<f64>,
    #[arg(long)]
    pub n_bath: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_prime: Option<f64>,
    /// open or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Fock cutoff of both oscillators.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_s0: Option<f64>,
    /// Drive rate of the oscillator trap frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mode_weight: Option<f64>,
    /// mapped (default) or direct.
    #[arg(long)]
    pub dynamics: Option<String>,
    /// Times at which the bare-energy two-point average is sampled.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed for the randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace every selfcheck tolerance with this value.
    #[arg(long)]
    pub strict: Option<f64>,
    #[arg(long)]
    pub sweep_variable: Option<SweepVariable>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_stop: Option<f64>,
    #[arg(long)]
    pub sweep_points: Option<usize>,
}
