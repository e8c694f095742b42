use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qthermo::models::{Boundary, CoupledModel, OscillatorModel, OscillatorParams, SpinModel, SpinParams};
use qthermo::thermo::Dynamics;
use serde::Deserialize;

use crate::cli::ParamArgs;
use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Selfcheck,
    Timeseries,
    Sweep,
    Fluctuation,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Selfcheck => "selfcheck",
            Experiment::Timeseries => "timeseries",
            Experiment::Sweep => "sweep",
            Experiment::Fluctuation => "fluctuation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Spin,
    Oscillator,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spin" => Ok(ModelKind::Spin),
            "oscillator" => Ok(ModelKind::Oscillator),
            other => Err(format!("unknown model '{other}' (expected spin or oscillator)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    G,
    #[serde(alias = "omega-b")]
    OmegaB,
    #[serde(alias = "tau-prime")]
    TauPrime,
}

impl FromStr for SweepVariable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "g" => Ok(SweepVariable::G),
            "omega_b" | "omega-b" => Ok(SweepVariable::OmegaB),
            "tau_prime" | "tau-prime" => Ok(SweepVariable::TauPrime),
            other => Err(format!("unknown sweep variable '{other}' (expected g, omega_b or tau_prime)")),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::G => "g",
            SweepVariable::OmegaB => "omega_b",
            SweepVariable::TauPrime => "tau_prime",
        })
    }
}

pub fn parse_dynamics(s: &str) -> Result<Dynamics, String> {
    match s {
        "mapped" => Ok(Dynamics::Mapped),
        "direct" => Ok(Dynamics::Direct),
        other => Err(format!("unknown dynamics '{other}' (expected mapped or direct)")),
    }
}

fn dynamics_name(d: Dynamics) -> &'static str {
    match d {
        Dynamics::Mapped => "mapped",
        Dynamics::Direct => "direct",
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub variable: Option<SweepVariable>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

/// Contents of a TOML run file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub model: Option<ModelKind>,
    pub beta: Option<f64>,
    pub tau_prime: Option<f64>,
    pub n_steps: Option<usize>,
    pub g: Option<f64>,
    pub omega_b: Option<f64>,
    pub h: Option<f64>,
    pub lambda_x0: Option<f64>,
    pub lambda_z0: Option<f64>,
    pub alpha_x: Option<f64>,
    pub alpha_z: Option<f64>,
    pub n_bath: Option<usize>,
    pub boundary: Option<String>,
    pub mass: Option<f64>,
    pub omega_s0: Option<f64>,
    pub alpha: Option<f64>,
    pub mode_weight: Option<f64>,
    pub n_max: Option<usize>,
    pub dynamics: Option<String>,
    pub samples: Option<usize>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out_path: Option<PathBuf>,
    pub strict: Option<f64>,
    pub sweep: Option<SweepFile>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    Spin(SpinParams),
    Oscillator(OscillatorParams),
}

impl ModelSpec {
    pub fn build(&self) -> qthermo::Result<Box<dyn CoupledModel>> {
        Ok(match self {
            ModelSpec::Spin(p) => Box::new(SpinModel::new(p.clone())?),
            ModelSpec::Oscillator(p) => Box::new(OscillatorModel::new(p.clone())?),
        })
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        match self {
            ModelSpec::Spin(p) => ModelSpec::Spin(SpinParams { g, ..p.clone() }),
            ModelSpec::Oscillator(p) => ModelSpec::Oscillator(OscillatorParams { g, ..p.clone() }),
        }
    }

    /// Sets the bath frequency: the transverse field for the spin bath, the mode frequency otherwise.
    pub fn with_bath_frequency(&self, w: f64) -> Self {
        match self {
            ModelSpec::Spin(p) => ModelSpec::Spin(SpinParams { omega_b: w, ..p.clone() }),
            ModelSpec::Oscillator(p) => ModelSpec::Oscillator(OscillatorParams { omega_bath: w, ..p.clone() }),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        (0..self.points).map(|k| self.start + span * k as f64 / (self.points - 1) as f64).collect()
    }
}

/// Fully resolved run parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub beta: f64,
    pub tau_prime: f64,
    pub n_steps: usize,
    pub dynamics: Dynamics,
    pub samples: usize,
    pub jobs: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub strict: Option<f64>,
    pub sweep: Option<Sweep>,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

impl RunConfig {
    pub fn resolve(experiment: Experiment, args: &ParamArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        if let Some(e) = &file.experiment {
            if e != &experiment.to_string() {
                return Err(ConfigError(format!("config is for experiment '{e}', not '{experiment}'")));
            }
        }
        let kind = pick(args.model, file.model, ModelKind::Spin);

        let spin_only = [
            ("h", args.h.is_some() || file.h.is_some()),
            ("lambda_x0", args.lambda_x0.is_some() || file.lambda_x0.is_some()),
            ("lambda_z0", args.lambda_z0.is_some() || file.lambda_z0.is_some()),
            ("alpha_x", args.alpha_x.is_some() || file.alpha_x.is_some()),
            ("alpha_z", args.alpha_z.is_some() || file.alpha_z.is_some()),
            ("n_bath", args.n_bath.is_some() || file.n_bath.is_some()),
            ("boundary", args.boundary.is_some() || file.boundary.is_some()),
        ];
        let oscillator_only = [
            ("mass", args.mass.is_some() || file.mass.is_some()),
            ("omega_s0", args.omega_s0.is_some() || file.omega_s0.is_some()),
            ("alpha", args.alpha.is_some() || file.alpha.is_some()),
            ("mode_weight", args.mode_weight.is_some() || file.mode_weight.is_some()),
            ("n_max", args.n_max.is_some() || file.n_max.is_some()),
        ];
        let foreign: &[(&str, bool)] = match kind {
            ModelKind::Spin => &oscillator_only,
            ModelKind::Oscillator => &spin_only,
        };
        if let Some((name, _)) = foreign.iter().find(|(_, set)| *set) {
            return Err(ConfigError(format!("parameter '{name}' does not apply to the {kind:?} model").to_lowercase()));
        }

        let model = match kind {
            ModelKind::Spin => {
                let d = SpinParams::default();
                let boundary = match args.boundary.clone().or(file.boundary.clone()) {
                    Some(b) => b.parse::<Boundary>().map_err(|e| ConfigError(e.to_string()))?,
                    None => d.boundary,
                };
                ModelSpec::Spin(SpinParams {
                    lambda_x0: pick(args.lambda_x0, file.lambda_x0, d.lambda_x0),
                    lambda_z0: pick(args.lambda_z0, file.lambda_z0, d.lambda_z0),
                    alpha_x: pick(args.alpha_x, file.alpha_x, d.alpha_x),
                    alpha_z: pick(args.alpha_z, file.alpha_z, d.alpha_z),
                    omega_b: pick(args.omega_b, file.omega_b, d.omega_b),
                    h: pick(args.h, file.h, d.h),
                    g: pick(args.g, file.g, d.g),
                    n_bath: pick(args.n_bath, file.n_bath, d.n_bath),
                    boundary,
                })
            }
            ModelKind::Oscillator => {
                let d = OscillatorParams::default();
                let n_max = pick(args.n_max, file.n_max, d.n_max_sys);
                ModelSpec::Oscillator(OscillatorParams {
                    mass: pick(args.mass, file.mass, d.mass),
                    omega_s0: pick(args.omega_s0, file.omega_s0, d.omega_s0),
                    alpha: pick(args.alpha, file.alpha, d.alpha),
                    omega_bath: pick(args.omega_b, file.omega_b, d.omega_bath),
                    g: pick(args.g, file.g, d.g),
                    mode_weight: pick(args.mode_weight, file.mode_weight, d.mode_weight),
                    n_max_sys: n_max,
                    n_max_bath: n_max,
                })
            }
        };
        match &model {
            ModelSpec::Spin(p) => p.validate(),
            ModelSpec::Oscillator(p) => p.validate(),
        }
        .map_err(|e| ConfigError(e.to_string()))?;

        let default_beta = match kind {
            ModelKind::Spin => 1.0,
            ModelKind::Oscillator => 4.08,
        };
        let dynamics = match args.dynamics.clone().or(file.dynamics.clone()) {
            Some(s) => parse_dynamics(&s).map_err(ConfigError)?,
            None => Dynamics::Mapped,
        };

        let sweep = if experiment == Experiment::Sweep {
            let f = file.sweep.unwrap_or_default();
            let variable = pick(args.sweep_variable, f.variable, SweepVariable::G);
            let (start, stop, points) = match variable {
                SweepVariable::G => (0.0, 1.0, 5),
                SweepVariable::OmegaB => (0.2, 2.0, 37),
                SweepVariable::TauPrime => (0.2, 2.0, 10),
            };
            Some(Sweep {
                variable,
                start: pick(args.sweep_start, f.start, start),
                stop: pick(args.sweep_stop, f.stop, stop),
                points: pick(args.sweep_points, f.points, points),
            })
        } else {
            None
        };

        let cfg = RunConfig {
            experiment,
            model,
            beta: pick(args.beta, file.beta, default_beta),
            tau_prime: pick(args.tau_prime, file.tau_prime, 2.0),
            n_steps: pick(args.steps, file.n_steps, 4096),
            dynamics,
            samples: pick(args.samples, file.samples, 64),
            jobs: pick(args.jobs, file.jobs, 1),
            seed: pick(args.seed, file.seed, 0),
            out: args.out.clone().or(file.out_path),
            strict: args.strict.or(file.strict),
            sweep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError(m.to_string()));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        let zero_ok = self.experiment == Experiment::Fluctuation;
        if !(self.tau_prime.is_finite() && (self.tau_prime > 0.0 || (zero_ok && self.tau_prime == 0.0))) {
            return bad("tau_prime must be positive (zero is allowed for fluctuation)");
        }
        if self.n_steps < 2 {
            return bad("steps must be at least 2");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if let Some(tol) = self.strict {
            if !(tol > 0.0) {
                return bad("strict tolerance must be positive");
            }
        }
        if let Some(s) = &self.sweep {
            if s.points < 2 {
                return bad("a sweep needs at least 2 points");
            }
            if !(s.start < s.stop) {
                return bad("sweep start must be below stop");
            }
            let lowest_ok = match s.variable {
                SweepVariable::G => s.start >= 0.0,
                SweepVariable::OmegaB | SweepVariable::TauPrime => s.start > 0.0,
            };
            if !lowest_ok {
                return bad("sweep range leaves the valid domain of its variable");
            }
        }
        Ok(())
    }

    /// Run-level parameters for CSV headers; the model describes itself.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![("experiment".to_string(), self.experiment.to_string())];
        for (k, v) in [
            ("beta", self.beta.to_string()),
            ("tau_prime", self.tau_prime.to_string()),
            ("n_steps", self.n_steps.to_string()),
            ("dynamics", dynamics_name(self.dynamics).to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
        ] {
            out.push((k.to_string(), v));
        }
        if let Some(tol) = self.strict {
            out.push(("strict".into(), tol.to_string()));
        }
        if let Some(s) = &self.sweep {
            out.push(("sweep_variable".into(), s.variable.to_string()));
            out.push(("sweep_start".into(), s.start.to_string()));
            out.push(("sweep_stop".into(), s.stop.to_string()));
            out.push(("sweep_points".into(), s.points.to_string()));
        }
        out
    }
}
