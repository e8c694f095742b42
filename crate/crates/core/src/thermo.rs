//! Work, heat, entropy and free energy along a driving protocol.

use crate::error::{Error, Result};
use crate::evolution::{step_unitary, TimeGrid};
use crate::models::{CoupledModel, ReducedMap};
use crate::operators::{conjugate, partial_trace, HermitianEigen, Operator, Subsystem};

/// Eigenvalues below this are dropped from `p ln p` sums.
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Largest tolerated drift of the state trace away from one.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GibbsState {
    pub state: Operator,
    pub partition: f64,
    pub log_partition: f64,
}

/// `e^{−βh}/Z`, with weights shifted by the ground energy to avoid overflow.
pub fn gibbs(h: &Operator, beta: f64) -> Result<GibbsState> {
    gibbs_from_eigen(&h.eigh()?, beta)
}

pub fn gibbs_from_eigen(eig: &HermitianEigen, beta: f64) -> Result<GibbsState> {
    let ground = eig.min();
    let total: f64 = eig.values.iter().map(|&e| (-beta * (e - ground)).exp()).sum();
    let state = eig.map_real(|e| (-beta * (e - ground)).exp() / total);
    let log_partition = total.ln() - beta * ground;
    Ok(GibbsState { state, partition: log_partition.exp(), log_partition })
}

/// ln Tr e^{−βh}.
pub fn log_partition(h: &Operator, beta: f64) -> Result<f64> {
    let eig = h.eigh()?;
    let ground = eig.min();
    let total: f64 = eig.values.iter().map(|&e| (-beta * (e - ground)).exp()).sum();
    Ok(total.ln() - beta * ground)
}

fn density_eigenvalues(rho: &Operator) -> Result<Vec<f64>> {
    let eig = rho.eigh()?;
    if let Some(&lowest) = eig.values.iter().min_by(|a, b| a.total_cmp(b)) {
        if lowest < -POSITIVITY_TOL {
            return Err(Error::Positivity { eigenvalue: lowest });
        }
    }
    Ok(eig.values)
}

/// −Tr ρ ln ρ.
pub fn von_neumann_entropy(rho: &Operator) -> Result<f64> {
    Ok(density_eigenvalues(rho)?.into_iter().filter(|&p| p > ENTROPY_FLOOR).map(|p| -p * p.ln()).sum())
}

/// Tr ρ ln ρ − Tr ρ ln σ, with both spectra floored.
pub fn relative_entropy(rho: &Operator, sigma: &Operator) -> Result<f64> {
    let neg_entropy = -von_neumann_entropy(rho)?;
    let sigma_eig = sigma.eigh()?;
    if sigma_eig.min() < -POSITIVITY_TOL {
        return Err(Error::Positivity { eigenvalue: sigma_eig.min() });
    }
    let log_sigma = sigma_eig.map_real(|p| p.max(ENTROPY_FLOOR).ln());
    Ok(neg_entropy - rho.expectation(&log_sigma)?)
}

/// D(ρ | e^{−βh}/Z), using ln of the Gibbs state in closed form.
pub fn relative_entropy_to_gibbs(rho: &Operator, h: &Operator, beta: f64) -> Result<f64> {
    let log_z = log_partition(h, beta)?;
    Ok(-von_neumann_entropy(rho)? + beta * rho.expectation(h)? + log_z * rho.trace().re)
}

/// `F = −T ln Tr_s e^{−βH_s(t)}`.
pub fn free_energy(model: &dyn CoupledModel, beta: f64, t: f64) -> Result<f64> {
    Ok(-log_partition(&model.system_hamiltonian(t)?, beta)? / beta)
}

#[derive(Clone, Debug)]
pub enum InitialState {
    /// Gibbs state of the coupled Hamiltonian at t = 0.
    GibbsTotal,
    Custom(Operator),
}

/// How the composite state is advanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    /// Propagate the full coupled state with the coupled Hamiltonian.
    Direct,
    /// Propagate in the uncoupled frame, where a Gibbs initial state stays a
    /// product and only the system factor evolves. Requires the Gibbs initial state.
    Mapped,
}

#[derive(Clone, Debug)]
pub struct ThermoConfig {
    pub beta: f64,
    pub tau_prime: f64,
    pub n_steps: usize,
    pub initial_state: InitialState,
    pub quasi_static: bool,
    pub dynamics: Dynamics,
}

impl ThermoConfig {
    pub fn new(beta: f64, tau_prime: f64, n_steps: usize) -> Self {
        Self {
            beta,
            tau_prime,
            n_steps,
            initial_state: InitialState::GibbsTotal,
            quasi_static: false,
            dynamics: Dynamics::Mapped,
        }
    }

    pub fn quasi_static(mut self) -> Self {
        self.quasi_static = true;
        self
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidParameter("n_steps must be at least 2".into()));
        }
        if !(self.tau_prime > 0.0 && self.tau_prime.is_finite()) {
            return Err(Error::InvalidParameter("tau_prime must be positive".into()));
        }
        if self.dynamics == Dynamics::Mapped && matches!(self.initial_state, InitialState::Custom(_)) {
            return Err(Error::InvalidParameter("mapped dynamics needs the Gibbs initial state; use direct".into()));
        }
        Ok(())
    }
}

/// Thermodynamic record at one grid node. Cumulative quantities start at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoRecord {
    pub t: f64,
    pub work: f64,
    pub work_weak: f64,
    pub heat: f64,
    pub heat_weak: f64,
    pub energy: f64,
    pub von_neumann: f64,
    pub relative_entropy: f64,
    pub entropy_change: f64,
    pub entropy_change_weak: f64,
    pub free_energy: f64,
    pub delta_work: f64,
    pub delta_heat: f64,
    pub first_law_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ThermoSeries {
    pub beta: f64,
    pub records: Vec<ThermoRecord>,
}

impl ThermoSeries {
    pub fn last(&self) -> &ThermoRecord {
        self.records.last().expect("series is never empty")
    }

    pub fn delta_max_work(&self) -> f64 {
        self.records.iter().map(|r| r.delta_work).fold(0.0, f64::max)
    }

    pub fn delta_max_heat(&self) -> f64 {
        self.records.iter().map(|r| r.delta_heat).fold(0.0, f64::max)
    }

    pub fn max_first_law_residual(&self) -> f64 {
        self.records.iter().map(|r| r.first_law_residual).fold(0.0, f64::max)
    }

    /// `e^{−β W_w(t)}` at every node.
    pub fn naive_exponential(&self) -> Vec<f64> {
        self.records.iter().map(|r| (-self.beta * r.work_weak).exp()).collect()
    }

    /// `|e^{−β W_w(t)} − Z_s(t)/Z_s(0)|` at every node.
    pub fn naive_deviation(&self) -> Vec<f64> {
        let f0 = self.records[0].free_energy;
        self.records
            .iter()
            .map(|r| ((-self.beta * r.work_weak).exp() - (-self.beta * (r.free_energy - f0)).exp()).abs())
            .collect()
    }
}

enum Frame {
    /// Full coupled state with the coupled Hamiltonian at the node.
    Coupled { rho: Operator, hamiltonian: Operator },
    /// System factor of the uncoupled-frame state with the bare system Hamiltonian.
    Uncoupled { factor: Operator, hamiltonian: Operator },
}

impl Frame {
    /// Trapezoidal Tr(ρ̄ Δ𝓗) between two nodes.
    fn work_to(&self, next: &Frame) -> Result<f64> {
        let (ra, ha, rb, hb) = match (self, next) {
            (Frame::Coupled { rho: ra, hamiltonian: ha }, Frame::Coupled { rho: rb, hamiltonian: hb }) => (ra, ha, rb, hb),
            (Frame::Uncoupled { factor: ra, hamiltonian: ha }, Frame::Uncoupled { factor: rb, hamiltonian: hb }) => {
                (ra, ha, rb, hb)
            }
            _ => unreachable!("frames do not change during a run"),
        };
        let dh = hb - ha;
        Ok(0.5 * (ra.expectation(&dh)? + rb.expectation(&dh)?))
    }
}

struct Node {
    t: f64,
    frame: Frame,
    system_hamiltonian: Operator,
    reduced: Operator,
    coupled_reduced: Operator,
    system_gibbs: GibbsState,
}

enum Engine<'a> {
    Direct { rho: Operator },
    Mapped { factor: Operator, map: ReducedMap, _model: &'a dyn CoupledModel },
}

struct Runner<'a> {
    model: &'a dyn CoupledModel,
    cfg: &'a ThermoConfig,
    grid: TimeGrid,
    engine: Engine<'a>,
}

impl<'a> Runner<'a> {
    fn new(model: &'a dyn CoupledModel, cfg: &'a ThermoConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = TimeGrid::new(0.0, cfg.tau_prime, cfg.n_steps)?;
        let engine = match cfg.dynamics {
            Dynamics::Direct => {
                let rho = match &cfg.initial_state {
                    InitialState::GibbsTotal => gibbs(&model.total_hamiltonian(0.0)?, cfg.beta)?.state,
                    InitialState::Custom(rho) => {
                        model.layout().check(rho)?;
                        rho.clone()
                    }
                };
                Engine::Direct { rho }
            }
            Dynamics::Mapped => {
                let bath = gibbs(model.bath_hamiltonian(), cfg.beta)?.state;
                let map = model.generator().reduced_map(model.coupling(), &bath)?;
                let factor = gibbs(&model.system_hamiltonian(0.0)?, cfg.beta)?.state;
                Engine::Mapped { factor, map, _model: model }
            }
        };
        Ok(Self { model, cfg, grid, engine })
    }

    fn node(&self, i: usize) -> Result<Node> {
        let t = self.grid.node(i);
        let beta = self.cfg.beta;
        let system_hamiltonian = self.model.system_hamiltonian(t)?;
        let system_gibbs = gibbs(&system_hamiltonian, beta)?;
        let layout = self.model.layout();
        let (frame, reduced, coupled_reduced) = match &self.engine {
            Engine::Direct { rho } => {
                let hamiltonian = self.model.total_hamiltonian(t)?;
                let equilibrium = gibbs(&hamiltonian, beta)?.state;
                let coupled_reduced = partial_trace(&equilibrium, layout, Subsystem::System)?;
                let rho = if self.cfg.quasi_static { equilibrium } else { rho.clone() };
                let reduced = partial_trace(&rho, layout, Subsystem::System)?;
                (Frame::Coupled { rho, hamiltonian }, reduced, coupled_reduced)
            }
            Engine::Mapped { factor, map, .. } => {
                let factor = if self.cfg.quasi_static { system_gibbs.state.clone() } else { factor.clone() };
                let coupled_reduced = map.apply(&system_gibbs.state)?;
                let reduced = map.apply(&factor)?;
                (Frame::Uncoupled { factor, hamiltonian: system_hamiltonian.clone() }, reduced, coupled_reduced)
            }
        };
        let drift = (reduced.trace().re - 1.0).abs();
        if drift > TRACE_DRIFT_TOL || !drift.is_finite() {
            return Err(Error::PropagationUnstable { drift, t });
        }
        Ok(Node { t, frame, system_hamiltonian, reduced, coupled_reduced, system_gibbs })
    }

    fn advance(&mut self, i: usize) -> Result<()> {
        if self.cfg.quasi_static {
            return Ok(());
        }
        let t = self.grid.midpoint(i);
        let dt = self.grid.dt();
        match &mut self.engine {
            Engine::Direct { rho } => {
                let u = step_unitary(&self.model.total_hamiltonian(t)?, dt)?;
                *rho = conjugate(&u, rho)?;
            }
            Engine::Mapped { factor, .. } => {
                let u = step_unitary(&self.model.system_hamiltonian(t)?, dt)?;
                *factor = conjugate(&u, factor)?;
            }
        }
        Ok(())
    }
}

struct EntropyParts {
    von_neumann: f64,
    relative: f64,
    weak: f64,
}

fn entropy_parts(node: &Node, beta: f64, quasi_static: bool) -> Result<EntropyParts> {
    let tracked = if quasi_static { &node.coupled_reduced } else { &node.reduced };
    let von_neumann = von_neumann_entropy(tracked)?;
    let relative = relative_entropy_to_gibbs(&node.coupled_reduced, &node.system_hamiltonian, beta)?;
    let weak = if quasi_static { von_neumann_entropy(&node.system_gibbs.state)? } else { von_neumann };
    Ok(EntropyParts { von_neumann, relative, weak })
}

/// Runs the protocol and accumulates strong- and weak-coupling thermodynamics
/// with trapezoidal weights.
pub fn run_protocol(model: &dyn CoupledModel, cfg: &ThermoConfig) -> Result<ThermoSeries> {
    let mut runner = Runner::new(model, cfg)?;
    let beta = cfg.beta;
    let mut prev = runner.node(0)?;
    let first = entropy_parts(&prev, beta, cfg.quasi_static)?;
    let e0 = prev.reduced.expectation(&prev.system_hamiltonian)?;
    let f0 = -prev.system_gibbs.log_partition / beta;

    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    records.push(ThermoRecord {
        t: 0.0,
        work: 0.0,
        work_weak: 0.0,
        heat: 0.0,
        heat_weak: 0.0,
        energy: e0,
        von_neumann: first.von_neumann,
        relative_entropy: first.relative,
        entropy_change: 0.0,
        entropy_change_weak: 0.0,
        free_energy: f0,
        delta_work: 0.0,
        delta_heat: 0.0,
        first_law_residual: 0.0,
    });

    let (mut work, mut work_weak, mut heat, mut heat_weak) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..cfg.n_steps {
        runner.advance(i)?;
        let next = runner.node(i + 1)?;

        let dw = prev.frame.work_to(&next.frame)?;
        let dh_s = &next.system_hamiltonian - &prev.system_hamiltonian;
        let drho_s = &next.reduced - &prev.reduced;
        let dw_weak = 0.5 * (prev.reduced.expectation(&dh_s)? + next.reduced.expectation(&dh_s)?);
        let dq_weak =
            0.5 * (prev.system_hamiltonian.expectation(&drho_s)? + next.system_hamiltonian.expectation(&drho_s)?);
        work += dw;
        work_weak += dw_weak;
        heat_weak += dq_weak;
        heat += dq_weak + dw_weak - dw;

        let energy = next.reduced.expectation(&next.system_hamiltonian)?;
        let parts = entropy_parts(&next, beta, cfg.quasi_static)?;
        records.push(ThermoRecord {
            t: next.t,
            work,
            work_weak,
            heat,
            heat_weak,
            energy,
            von_neumann: parts.von_neumann,
            relative_entropy: parts.relative,
            entropy_change: parts.von_neumann - first.von_neumann + parts.relative - first.relative,
            entropy_change_weak: parts.weak - first.weak,
            free_energy: -next.system_gibbs.log_partition / beta,
            delta_work: (work - work_weak).abs(),
            delta_heat: (heat - heat_weak).abs(),
            first_law_residual: (energy - e0 - work - heat).abs(),
        });
        prev = next;
    }
    Ok(ThermoSeries { beta, records })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyTerms {
    pub von_neumann: f64,
    pub relative: f64,
    pub entropy_change: f64,
}

/// Entropy terms at time `t`, from a run of the configured protocol truncated at `t`
/// with the same step size.
pub fn entropy_terms(model: &dyn CoupledModel, cfg: &ThermoConfig, t: f64) -> Result<EntropyTerms> {
    if !(t > 0.0 && t <= cfg.tau_prime) {
        return Err(Error::InvalidParameter(format!("t = {t} outside (0, tau_prime]")));
    }
    let steps = ((cfg.n_steps as f64) * t / cfg.tau_prime).round().max(2.0) as usize;
    let sub = ThermoConfig { tau_prime: t, n_steps: steps, ..cfg.clone() };
    let last = run_protocol(model, &sub)?.last().clone();
    Ok(EntropyTerms { von_neumann: last.von_neumann, relative: last.relative_entropy, entropy_change: last.entropy_change })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergyCheck {
    /// max_t |ΔF − (ΔE − T ΔS)| with ΔS accumulated as β ∫ dQ.
    pub residual: f64,
    /// Same with ΔS taken from the entropy state function.
    pub state_function_residual: f64,
    pub delta_free_energy: f64,
    pub delta_energy: f64,
    pub delta_entropy: f64,
}

/// Checks ΔF = ΔE − TΔS along a quasi-static run.
pub fn delta_f_identity_check(model: &dyn CoupledModel, cfg: &ThermoConfig) -> Result<FreeEnergyCheck> {
    if !cfg.quasi_static {
        return Err(Error::InvalidParameter("the free-energy identity needs quasi-static mode".into()));
    }
    let series = run_protocol(model, cfg)?;
    let temperature = 1.0 / cfg.beta;
    let r0 = &series.records[0];
    let mut residual = 0.0f64;
    let mut state_function_residual = 0.0f64;
    for r in &series.records {
        let df = r.free_energy - r0.free_energy;
        let de = r.energy - r0.energy;
        residual = residual.max((df - (de - r.heat)).abs());
        state_function_residual = state_function_residual.max((df - (de - temperature * r.entropy_change)).abs());
    }
    let last = series.last();
    Ok(FreeEnergyCheck {
        residual,
        state_function_residual,
        delta_free_energy: last.free_energy - r0.free_energy,
        delta_energy: last.energy - r0.energy,
        delta_entropy: last.entropy_change,
    })
}
