use std::sync::OnceLock;

use faer::{c64, Mat};

use super::{CoupledModel, DressedParts, ProductGenerator};
use crate::error::{Error, Result};
use crate::operators::{annihilation, conjugate, kron, DimensionLayout, Operator};

#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    /// System trap frequency at t = 0; also the reference frequency of the quadratures.
    pub omega_s0: f64,
    pub alpha: f64,
    pub omega_bath: f64,
    pub g: f64,
    pub mode_weight: f64,
    pub n_max_sys: usize,
    pub n_max_bath: usize,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega_s0: 2.83,
            alpha: -0.1,
            omega_bath: 1.0,
            g: 0.1,
            mode_weight: 1.0,
            n_max_sys: 30,
            n_max_bath: 30,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_max_sys < 2 || self.n_max_bath < 2 {
            return Err(Error::InvalidParameter("Fock cutoffs must be at least 2".into()));
        }
        if (self.n_max_sys + 1) * (self.n_max_bath + 1) > 4096 {
            return Err(Error::InvalidParameter("truncated dimension above 4096".into()));
        }
        if !(self.mass > 0.0 && self.omega_s0 > 0.0 && self.omega_bath > 0.0) {
            return Err(Error::InvalidParameter("mass and frequencies must be positive".into()));
        }
        if !(self.g >= 0.0) || !self.alpha.is_finite() || !self.mode_weight.is_finite() {
            return Err(Error::InvalidParameter("g must be nonnegative; alpha and mode weight finite".into()));
        }
        Ok(())
    }

    pub fn omega_s(&self, t: f64) -> Result<f64> {
        let w = self.omega_s0 * (1.0 + self.alpha * t);
        if w <= 0.0 {
            return Err(Error::NonpositiveFrequency { t });
        }
        Ok(w)
    }

    /// Curvature of the trap, m·ω_s(t)².
    pub fn stiffness(&self, t: f64) -> Result<f64> {
        Ok(self.mass * self.omega_s(t)?.powi(2))
    }

    /// Effective mass of the mapped system.
    pub fn renormalized_mass(&self) -> f64 {
        let m = self.mass;
        m / (1.0 + 2.0 * m * self.g.powi(2) * self.omega_bath * self.mode_weight.powi(2))
    }
}

/// Result of comparing the conjugated Hamiltonian with its closed form.
#[derive(Clone, Debug)]
pub struct MappedCheck {
    /// Max deviation on the interior block.
    pub max_deviation: f64,
    /// Fock indices below this bound (in both factors) form the interior block.
    pub interior: usize,
    pub kinetic_coefficient: f64,
    pub expected_kinetic_coefficient: f64,
}

/// Driven oscillator linearly coupled to one bath mode, in truncated Fock space.
#[derive(Debug)]
pub struct OscillatorModel {
    params: OscillatorParams,
    layout: DimensionLayout,
    position: Operator,
    momentum: Operator,
    position_sq: Operator,
    kinetic: Operator,
    bath: Operator,
    quadrature: Operator,
    bath_momentum: Operator,
    generator: ProductGenerator,
    mapping: Operator,
    mapped: OnceLock<MappedPieces>,
}

#[derive(Debug)]
struct MappedPieces {
    kinetic: Operator,
    position_sq: Operator,
    bath: Operator,
}

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

impl OscillatorModel {
    pub fn new(params: OscillatorParams) -> Result<Self> {
        params.validate()?;
        let ds = params.n_max_sys + 1;
        let db = params.n_max_bath + 1;
        let layout = DimensionLayout::new(ds, db)?;
        let (m, w0) = (params.mass, params.omega_s0);

        let b = annihilation(params.n_max_sys);
        let bd = b.adjoint();
        let position = (&b + &bd).scale_real(1.0 / (2.0 * m * w0).sqrt()).hermitian_part();
        let momentum = (&bd - &b).scale(c64::new(0.0, (m * w0 / 2.0).sqrt())).hermitian_part();
        let position_sq = (&position * &position).hermitian_part();
        let kinetic = (&momentum * &momentum).hermitian_part().scale_real(0.5 / m);

        let a = annihilation(params.n_max_bath);
        let ad = a.adjoint();
        let number: Vec<f64> = (0..db).map(|n| n as f64 * params.omega_bath).collect();
        let bath = Operator::diagonal(&number);
        let quadrature = (&a + &ad).hermitian_part();
        let bath_momentum = (&ad - &a).scale(c64::new(0.0, 1.0)).hermitian_part();

        let generator = ProductGenerator::new(momentum.clone(), quadrature.scale_real(params.mode_weight))?;
        let mapping = generator.exp_i(params.g);

        Ok(Self {
            params,
            layout,
            position,
            momentum,
            position_sq,
            kinetic,
            bath,
            quadrature,
            bath_momentum,
            generator,
            mapping,
            mapped: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn position(&self) -> &Operator {
        &self.position
    }

    pub fn momentum(&self) -> &Operator {
        &self.momentum
    }

    fn mapped(&self) -> Result<&MappedPieces> {
        if let Some(p) = self.mapped.get() {
            return Ok(p);
        }
        let ib = Operator::identity(self.layout.bath);
        let is = Operator::identity(self.layout.system);
        let pieces = MappedPieces {
            kinetic: conjugate(&self.mapping, &kron(&self.kinetic, &ib))?,
            position_sq: conjugate(&self.mapping, &kron(&self.position_sq, &ib))?,
            bath: conjugate(&self.mapping, &kron(&is, &self.bath))?,
        };
        Ok(self.mapped.get_or_init(|| pieces))
    }

    /// Closed-form dressed system, bath and interaction Hamiltonians.
    pub fn analytic_parts(&self, t: f64) -> Result<DressedParts> {
        let p = &self.params;
        let stiffness = p.stiffness(t)?;
        let shift = p.g * p.mode_weight;
        let system = &self.kinetic.scale_real(p.mass / p.renormalized_mass()) + &self.position_sq.scale_real(0.5 * stiffness);
        let quad_sq = (&self.quadrature * &self.quadrature).hermitian_part();
        let bath = &self.bath + &quad_sq.scale_real(0.5 * stiffness * shift * shift);
        let interaction = &kron(&self.position, &self.quadrature).scale_real(stiffness * shift)
            - &kron(&self.momentum, &self.bath_momentum).scale_real(shift * p.omega_bath);
        Ok(DressedParts { system, bath, interaction })
    }

    /// Compares the conjugated Hamiltonian with the closed form on the lower
    /// half of both Fock ladders, and extracts the kinetic coefficient.
    pub fn mapped_check(&self, t: f64) -> Result<MappedCheck> {
        let total = self.total_hamiltonian(t)?;
        let analytic = self.analytic_parts(t)?.assemble();
        let db = self.layout.bath;
        let cut_s = self.layout.system / 2;
        let cut_b = db / 2;
        let interior = cut_s.min(cut_b);
        let mut max_deviation = 0.0f64;
        for i in 0..total.dim() {
            let (ia, ik) = (i / db, i % db);
            if ia >= cut_s || ik >= cut_b {
                continue;
            }
            for j in 0..total.dim() {
                let (ja, jk) = (j / db, j % db);
                if ja >= cut_s || jk >= cut_b {
                    continue;
                }
                max_deviation = max_deviation.max((total.get(i, j) - analytic.get(i, j)).norm());
            }
        }
        // <0,0| H |2,0> = c <0|p²|2> + ½λ <0|x²|2>
        let stiffness = self.params.stiffness(t)?;
        let p_sq = &self.momentum * &self.momentum;
        let h02 = total.get(0, 2 * db).re;
        let kinetic_coefficient = (h02 - 0.5 * stiffness * self.position_sq.get(0, 2).re) / p_sq.get(0, 2).re;
        Ok(MappedCheck {
            max_deviation,
            interior,
            kinetic_coefficient,
            expected_kinetic_coefficient: 0.5 / self.params.renormalized_mass(),
        })
    }
}

impl CoupledModel for OscillatorModel {
    fn layout(&self) -> DimensionLayout {
        self.layout
    }

    fn coupling(&self) -> f64 {
        self.params.g
    }

    fn system_hamiltonian(&self, t: f64) -> Result<Operator> {
        let stiffness = self.params.stiffness(t)?;
        Ok(&self.kinetic + &self.position_sq.scale_real(0.5 * stiffness))
    }

    fn bath_hamiltonian(&self) -> &Operator {
        &self.bath
    }

    fn generator(&self) -> &ProductGenerator {
        &self.generator
    }

    fn mapping(&self) -> &Operator {
        &self.mapping
    }

    /// The conjugated uncoupled Hamiltonian, assembled from cached pieces.
    fn total_hamiltonian(&self, t: f64) -> Result<Operator> {
        let c = 0.5 * self.params.stiffness(t)?;
        let pieces = self.mapped()?;
        let dim = self.layout.total();
        let (k, x, b) = (pieces.kinetic.entries(), pieces.position_sq.entries(), pieces.bath.entries());
        Operator::hermitian(Mat::from_fn(dim, dim, |i, j| k[(i, j)] + x[(i, j)] * real(c) + b[(i, j)]))
    }

    /// Analytic dressed system and bath; the interaction is the remainder.
    fn dressed_parts(&self, t: f64) -> Result<DressedParts> {
        let analytic = self.analytic_parts(t)?;
        let separable = DressedParts {
            system: analytic.system.clone(),
            bath: analytic.bath.clone(),
            interaction: Operator::zeros(self.layout.total()),
        }
        .assemble();
        let interaction = &self.total_hamiltonian(t)? - &separable;
        Ok(DressedParts { system: analytic.system, bath: analytic.bath, interaction })
    }

    fn describe(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("model", "oscillator".into()),
            ("mass", p.mass.to_string()),
            ("omega_s0", p.omega_s0.to_string()),
            ("alpha", p.alpha.to_string()),
            ("omega_bath", p.omega_bath.to_string()),
            ("g", p.g.to_string()),
            ("mode_weight", p.mode_weight.to_string()),
            ("n_max_sys", p.n_max_sys.to_string()),
            ("n_max_bath", p.n_max_bath.to_string()),
            ("generator", "p (x) mode_weight*(a+a^dag)".into()),
        ]
    }
}
