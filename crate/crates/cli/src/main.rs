mod cli;
mod config;
mod experiments;
mod output;
mod selfcheck;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use config::{Experiment, RunConfig};

/// Invalid or inconsistent run configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

enum Failure {
    Config(String),
    Numeric(String),
    Verification,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<qthermo::Error> for Failure {
    fn from(e: qthermo::Error) -> Self {
        match e {
            qthermo::Error::InvalidParameter(_) | qthermo::Error::NonpositiveFrequency { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    let experiment = match command {
        Command::Selfcheck(_) => Experiment::Selfcheck,
        Command::Timeseries(_) => Experiment::Timeseries,
        Command::Sweep(_) => Experiment::Sweep,
        Command::Fluctuation(_) => Experiment::Fluctuation,
    };
    let cfg = RunConfig::resolve(experiment, command.args())?;
    let table = match experiment {
        Experiment::Selfcheck => {
            let checks = selfcheck::run(&cfg)?;
            let mut table = experiments::header(&cfg)?;
            for c in &checks {
                table.line(c.line());
            }
            table.write_to(cfg.out.as_deref())?;
            if checks.iter().all(selfcheck::Check::pass) {
                return Ok(());
            }
            return Err(Failure::Verification);
        }
        Experiment::Timeseries => experiments::timeseries(&cfg)?,
        Experiment::Sweep => experiments::sweep(&cfg)?,
        Experiment::Fluctuation => experiments::fluctuation(&cfg)?,
    };
    table.write_to(cfg.out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
