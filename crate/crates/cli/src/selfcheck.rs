use qthermo::c64;
use qthermo::evolution::{interaction_picture_identity, three_stage_decompose, Stage};
use qthermo::fluctuation::{crooks_report, jarzynski, Propagation, WorkProtocol};
use qthermo::models::{rotation_identity_residual, CoupledModel, OscillatorModel, OscillatorParams};
use qthermo::operators::{conjugate, herm_exp, kron, partial_trace, Operator, Subsystem};
use qthermo::thermo::{log_partition, run_protocol, ThermoConfig};
use qthermo::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelSpec, RunConfig};

/// Fock cutoff used for the propagation checks of the oscillator.
const OSCILLATOR_CHECK_CUTOFF: usize = 8;

pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.residual <= self.tol
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        format!("CHECK {} {:.6e} {:.1e} {verdict}", self.name, self.residual, self.tol)
    }
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn sample_times(tau_prime: f64) -> [f64; 3] {
    [0.0, 0.5 * tau_prime, tau_prime]
}

/// Runs every identity; `--strict` replaces all tolerances.
pub fn run(cfg: &RunConfig) -> Result<Vec<Check>> {
    let model = cfg.model.build()?;
    let m = model.as_ref();
    let g = m.coupling();
    let mut checks = Vec::new();
    let mut push = |name, residual, tol| checks.push(Check { name, residual, tol });

    let rotation = {
        let angles = [g, 0.7, std::f64::consts::FRAC_PI_2];
        let mut acc = Vec::new();
        for a in angles {
            for n in 1..=3 {
                acc.push(rotation_identity_residual(a, 1, n)?);
            }
        }
        worst(acc)
    };
    push("rotation_identity", rotation, 1e-11);

    // the propagation checks below use a reduced oscillator
    let propagated: Box<dyn CoupledModel> = match &cfg.model {
        ModelSpec::Spin(_) => {
            let u = herm_exp(&m.generator().full(), c64::new(0.0, g))?;
            let mut acc = Vec::new();
            for t in sample_times(cfg.tau_prime) {
                acc.push(m.total_hamiltonian(t)?.max_abs_diff(&conjugate(&u, &m.uncoupled_hamiltonian(t)?)?));
            }
            push("mapping_identity", worst(acc), 1e-11);
            cfg.model.build()?
        }
        ModelSpec::Oscillator(p) => {
            let osc = OscillatorModel::new(p.clone())?;
            let mut deviation = Vec::new();
            let mut kinetic = Vec::new();
            for t in sample_times(cfg.tau_prime) {
                let c = osc.mapped_check(t)?;
                deviation.push(c.max_deviation);
                kinetic.push((c.kinetic_coefficient - c.expected_kinetic_coefficient).abs());
            }
            push("mapping_identity", worst(deviation), 1e-5);
            push("kinetic_coefficient", worst(kinetic), 1e-6);
            let cutoff = p.n_max_sys.min(OSCILLATOR_CHECK_CUTOFF);
            let reduced = OscillatorParams { n_max_sys: cutoff, n_max_bath: p.n_max_bath.min(cutoff), ..p.clone() };
            Box::new(OscillatorModel::new(reduced)?)
        }
    };
    let pm = propagated.as_ref();

    let split = three_stage_decompose(pm, cfg.tau_prime, cfg.n_steps)?;
    push("three_stage_residual", split.residual, 1e-9);
    push("three_stage_discretization", split.discretization_error, 1e-6);

    push(
        "interaction_picture_initial",
        interaction_picture_identity(pm, Stage::Initial, cfg.tau_prime, 1.0, cfg.n_steps)?,
        1e-5,
    );
    push(
        "interaction_picture_final",
        interaction_picture_identity(pm, Stage::Final, cfg.tau_prime, 1.0, cfg.n_steps)?,
        1e-5,
    );

    let zb = log_partition(m.bath_hamiltonian(), cfg.beta)?;
    let mut factorization = Vec::new();
    for t in sample_times(cfg.tau_prime) {
        let z = log_partition(&m.total_hamiltonian(t)?, cfg.beta)?;
        let zs = log_partition(&m.system_hamiltonian(t)?, cfg.beta)?;
        factorization.push((z - zs - zb).abs());
    }
    push("partition_factorization", worst(factorization), 1e-10);

    let thermo_cfg = ThermoConfig::new(cfg.beta, cfg.tau_prime, cfg.n_steps).with_dynamics(cfg.dynamics);
    let series = run_protocol(pm, &thermo_cfg)?;
    push("first_law", series.max_first_law_residual(), 1e-8);

    let protocol = WorkProtocol::new(pm, cfg.tau_prime, cfg.n_steps, cfg.beta, Propagation::Direct)?;
    let (forward, reverse) = (protocol.forward()?, protocol.reverse()?);
    let ratio = protocol.system_ratio();
    push("jarzynski", (jarzynski(&forward, cfg.beta) / ratio - 1.0).abs(), 1e-8);
    let report = crooks_report(&forward, &reverse, ratio, cfg.beta);
    let crooks = if report.has_support_mismatch() { f64::INFINITY } else { report.max_rel_err };
    push("crooks", crooks, 1e-6);

    push("partial_trace", random_partial_trace(pm, cfg.seed)?, 1e-12);

    if let Some(tol) = cfg.strict {
        for c in &mut checks {
            c.tol = tol;
        }
    }
    Ok(checks)
}

/// `Tr(ρ (A ⊗ I)) = Tr(Tr_b(ρ) A)` for a seeded random state and observable.
fn random_partial_trace(model: &dyn CoupledModel, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = model.layout();
    let mut random_positive = |n: usize| {
        let mut m = Operator::from_fn(n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        m = m.matmul(&m.adjoint()).expect("square");
        m.hermitian_part()
    };
    let raw = random_positive(layout.total());
    let rho = raw.scale_real(1.0 / raw.trace().re);
    let a = random_positive(layout.system);
    let full = rho.expectation(&kron(&a, &Operator::identity(layout.bath)))?;
    let reduced = partial_trace(&rho, layout, Subsystem::System)?.expectation(&a)?;
    Ok((full - reduced).abs() / full.abs().max(1.0))
}
