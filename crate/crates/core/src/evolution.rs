//! Time-ordered propagation and the three-stage form of the coupled propagator.

use faer::c64;

use crate::error::{Error, Result};
use crate::models::CoupledModel;
use crate::operators::{conjugate, exp_from_eigen, herm_exp, kron, Operator};

/// Uniform grid on `[t0, t1]`. A zero-length grid is allowed and propagates trivially.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidParameter("a time grid needs at least one step".into()));
        }
        if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
            return Err(Error::InvalidParameter(format!("invalid time interval [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1, n_steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 0.5) * self.dt()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|i| self.node(i))
    }

    /// The same interval with twice as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n_steps: self.n_steps * factor, ..*self }
    }
}

#[derive(Clone, Debug)]
pub struct PropagatorResult {
    pub unitary: Operator,
    pub grid: TimeGrid,
    /// Global order of accuracy of the scheme.
    pub scheme_order: u32,
}

/// `exp(−i h dt)`.
pub fn step_unitary(h: &Operator, dt: f64) -> Result<Operator> {
    herm_exp(h, c64::new(0.0, -dt))
}

/// Product of midpoint exponentials, latest time on the left.
pub fn propagate<F>(mut hamiltonian: F, grid: TimeGrid) -> Result<PropagatorResult>
where
    F: FnMut(f64) -> Result<Operator>,
{
    let dt = grid.dt();
    let mut u: Option<Operator> = None;
    for i in 0..grid.n_steps {
        let step = step_unitary(&hamiltonian(grid.midpoint(i))?, dt)?;
        u = Some(match u {
            None => step,
            Some(acc) => step.matmul(&acc)?,
        });
    }
    let unitary = u.expect("grid has at least one step");
    Ok(PropagatorResult { unitary, grid, scheme_order: 2 })
}

/// Propagator from `t1` back to `t0` through the same midpoints in reverse order.
pub fn propagate_reverse<F>(mut hamiltonian: F, grid: TimeGrid) -> Result<PropagatorResult>
where
    F: FnMut(f64) -> Result<Operator>,
{
    let dt = grid.dt();
    let mut u: Option<Operator> = None;
    for i in (0..grid.n_steps).rev() {
        let step = herm_exp(&hamiltonian(grid.midpoint(i))?, c64::new(0.0, dt))?;
        u = Some(match u {
            None => step,
            Some(acc) => step.matmul(&acc)?,
        });
    }
    let unitary = u.expect("grid has at least one step");
    Ok(PropagatorResult { unitary, grid, scheme_order: 2 })
}

/// Propagator of the driven system alone.
pub fn system_propagator(model: &dyn CoupledModel, grid: TimeGrid) -> Result<Operator> {
    Ok(propagate(|t| model.system_hamiltonian(t), grid)?.unitary)
}

/// `exp(−i H_b T)` for the static bath.
pub fn bath_propagator(model: &dyn CoupledModel, duration: f64) -> Result<Operator> {
    herm_exp(model.bath_hamiltonian(), c64::new(0.0, -duration))
}

/// Uncoupled propagator in factorized form, `U_s ⊗ exp(−i H_b T)`.
pub fn uncoupled_propagator(model: &dyn CoupledModel, grid: TimeGrid) -> Result<Operator> {
    let us = system_propagator(model, grid)?;
    Ok(kron(&us, &bath_propagator(model, grid.t1 - grid.t0)?))
}

/// Coupled propagator assembled as `e^{igG} (U_s ⊗ U_b) e^{−igG}`.
pub fn mapped_propagator(model: &dyn CoupledModel, grid: TimeGrid) -> Result<Operator> {
    conjugate(model.mapping(), &uncoupled_propagator(model, grid)?)
}

/// Highly accurate system propagator: Richardson extrapolation of the midpoint
/// rule on a grid `refine` times finer.
pub fn reference_system_propagator(model: &dyn CoupledModel, grid: TimeGrid, refine: usize) -> Result<Operator> {
    let coarse = propagate(|t| model.system_hamiltonian(t), grid.refined(refine))?.unitary;
    let fine = propagate(|t| model.system_hamiltonian(t), grid.refined(2 * refine))?.unitary;
    Ok(&fine.scale_real(4.0 / 3.0) - &coarse.scale_real(1.0 / 3.0))
}

/// The three factors of the coupled propagator and how well they reproduce it.
#[derive(Clone, Debug)]
pub struct ThreeStage {
    pub u_plus: Operator,
    pub u_uc: Operator,
    pub u_minus: Operator,
    /// Max-norm gap between direct propagation of the coupled Hamiltonian and
    /// `u_plus · u_uc · u_minus`, both on the same grid.
    pub residual: f64,
    /// Max-norm gap between direct propagation and the three-stage product
    /// built from a converged uncoupled propagator.
    pub discretization_error: f64,
}

pub fn three_stage_decompose(model: &dyn CoupledModel, tau_prime: f64, n_steps: usize) -> Result<ThreeStage> {
    let grid = TimeGrid::new(0.0, tau_prime, n_steps)?;
    let direct = propagate(|t| model.total_hamiltonian(t), grid)?.unitary;
    let u_uc = propagate(|t| model.uncoupled_hamiltonian(t), grid)?.unitary;
    let u_plus = model.mapping().clone();
    let u_minus = u_plus.adjoint();
    let residual = direct.max_abs_diff(&conjugate(&u_plus, &u_uc)?);

    let reference_uc = kron(&reference_system_propagator(model, grid, 16)?, &bath_propagator(model, tau_prime)?);
    let reference = &(&u_plus * &reference_uc) * &u_minus;
    let discretization_error = direct.max_abs_diff(&reference);
    Ok(ThreeStage { u_plus, u_uc, u_minus, residual, discretization_error })
}

/// Which switching stage of the three-stage picture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Coupling switched off against `H_uc(0)`.
    Initial,
    /// Coupling switched back on against `H_uc(τ')`.
    Final,
}

impl Stage {
    /// Sign of the generator term in the switching Hamiltonian.
    fn sign(self) -> f64 {
        match self {
            Stage::Initial => 1.0,
            Stage::Final => -1.0,
        }
    }
}

/// Propagates `H + s(g/τ) G(t)` with `G(t) = e^{−iHt} G e^{iHt}` over `[0, τ]`
/// and returns the max-norm distance to `e^{−iHτ} e^{−isgG}`, where `H` is the
/// uncoupled Hamiltonian at the start (`Initial`, s = +1) or end (`Final`,
/// s = −1) of the protocol.
pub fn interaction_picture_identity(
    model: &dyn CoupledModel,
    stage: Stage,
    tau_prime: f64,
    tau: f64,
    n_steps: usize,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("switching time must be positive".into()));
    }
    let anchor = match stage {
        Stage::Initial => 0.0,
        Stage::Final => tau_prime,
    };
    let h = model.uncoupled_hamiltonian(anchor)?;
    let h_eigen = h.eigh()?;
    let g_full = model.generator().full();
    let strength = stage.sign() * model.coupling() / tau;

    let grid = TimeGrid::new(0.0, tau, n_steps)?;
    let numeric = propagate(
        |t| {
            let rotate = exp_from_eigen(&h_eigen, c64::new(0.0, -t));
            Ok(&h + &conjugate(&rotate, &g_full)?.scale_real(strength))
        },
        grid,
    )?
    .unitary;
    let closed = exp_from_eigen(&h_eigen, c64::new(0.0, -tau))
        .matmul(&model.generator().exp_i(-stage.sign() * model.coupling()))?;
    Ok(numeric.max_abs_diff(&closed))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchingWork {
    /// Work of the initial stage.
    pub minus: f64,
    /// Work of the final stage.
    pub plus: f64,
}

/// `W_± = ∓(g/τ)[Tr(ρ G_±(τ)) − Tr(ρ G)]` at fixed state `ρ`; the default state is
/// the Gibbs state of the coupled Hamiltonian at t = 0.
pub fn switching_work(
    model: &dyn CoupledModel,
    tau_prime: f64,
    tau: f64,
    beta: f64,
    state: Option<&Operator>,
) -> Result<SwitchingWork> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("switching time must be positive".into()));
    }
    let owned;
    let rho = match state {
        Some(r) => r,
        None => {
            owned = crate::thermo::gibbs(&model.total_hamiltonian(0.0)?, beta)?.state;
            &owned
        }
    };
    let g_full = model.generator().full();
    let base = rho.expectation(&g_full)?;
    let evolved = |anchor: f64| -> Result<f64> {
        let rotate = herm_exp(&model.uncoupled_hamiltonian(anchor)?, c64::new(0.0, -tau))?;
        rho.expectation(&conjugate(&rotate, &g_full)?)
    };
    let scale = model.coupling() / tau;
    Ok(SwitchingWork {
        minus: scale * (evolved(0.0)? - base),
        plus: -scale * (evolved(tau_prime)? - base),
    })
}
