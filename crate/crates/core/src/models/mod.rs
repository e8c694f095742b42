//! Concrete system-bath models and the structure they share.

mod oscillator;
mod rotation;
mod spin;

pub use oscillator::{MappedCheck, OscillatorModel, OscillatorParams};
pub use rotation::rotation_identity_residual;
pub use spin::{Boundary, SpinModel, SpinParams};

use faer::{c64, Mat};

use crate::error::Result;
use crate::operators::{exp_from_eigen, kron, DimensionLayout, HermitianEigen, Operator};

/// A generator of the form `system ⊗ bath`, diagonalized factor by factor.
#[derive(Clone, Debug)]
pub struct ProductGenerator {
    system: Operator,
    bath: Operator,
    system_eigen: HermitianEigen,
    bath_eigen: HermitianEigen,
}

impl ProductGenerator {
    pub fn new(system: Operator, bath: Operator) -> Result<Self> {
        let system_eigen = system.eigh()?;
        let bath_eigen = bath.eigh()?;
        Ok(Self { system, bath, system_eigen, bath_eigen })
    }

    pub fn system_factor(&self) -> &Operator {
        &self.system
    }

    pub fn bath_factor(&self) -> &Operator {
        &self.bath
    }

    pub fn layout(&self) -> DimensionLayout {
        DimensionLayout { system: self.system.dim(), bath: self.bath.dim() }
    }

    /// The full composite operator.
    pub fn full(&self) -> Operator {
        kron(&self.system, &self.bath)
    }

    /// Spectral decomposition assembled from the two factors.
    pub fn eigen(&self) -> HermitianEigen {
        let db = self.bath_eigen.dim();
        let values = self
            .system_eigen
            .values
            .iter()
            .flat_map(|&s| self.bath_eigen.values.iter().map(move |&b| s * b))
            .collect::<Vec<_>>();
        let vectors = self.system_eigen.vectors.as_ref().kron(self.bath_eigen.vectors.as_ref());
        debug_assert_eq!(values.len(), self.system_eigen.dim() * db);
        HermitianEigen { values, vectors }
    }

    /// `exp(i · angle · G)`.
    pub fn exp_i(&self, angle: f64) -> Operator {
        exp_from_eigen(&self.eigen(), c64::new(0.0, angle))
    }

    /// The reduced-state map `X ↦ Tr_b[e^{iθG} (X ⊗ bath_state) e^{−iθG}]`.
    pub fn reduced_map(&self, angle: f64, bath_state: &Operator) -> Result<ReducedMap> {
        let wb = self.bath_eigen.vectors.as_ref();
        let rotated = &(wb.adjoint() * bath_state.entries()) * wb;
        let betas = &self.system_eigen.values;
        let mus = &self.bath_eigen.values;
        let ds = betas.len();
        let coherence = Mat::from_fn(ds, ds, |a, b| {
            mus.iter()
                .enumerate()
                .map(|(k, &mu)| c64::new(0.0, angle * (betas[a] - betas[b]) * mu).exp() * rotated[(k, k)])
                .sum()
        });
        Ok(ReducedMap { basis: self.system_eigen.vectors.clone(), coherence })
    }
}

/// Reduced dynamics induced by the mapping on product inputs.
///
/// In the eigenbasis of the system factor the map acts as an entrywise
/// product with a fixed coherence matrix.
#[derive(Clone, Debug)]
pub struct ReducedMap {
    basis: Mat<c64>,
    coherence: Mat<c64>,
}

impl ReducedMap {
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        let w = self.basis.as_ref();
        let rotated = &(w.adjoint() * x.entries()) * w;
        let n = rotated.nrows();
        let damped = Mat::from_fn(n, n, |i, j| rotated[(i, j)] * self.coherence[(i, j)]);
        let out = &(w * damped.as_ref()) * w.adjoint();
        if x.is_hermitian() {
            Operator::new(out).map(|o| o.hermitian_part())
        } else {
            Operator::new(out)
        }
    }
}

/// The three pieces of the strongly coupled Hamiltonian at one time.
#[derive(Clone, Debug)]
pub struct DressedParts {
    /// Dressed system Hamiltonian, on the system space.
    pub system: Operator,
    /// Dressed bath Hamiltonian, on the bath space.
    pub bath: Operator,
    /// Interaction, on the composite space.
    pub interaction: Operator,
}

impl DressedParts {
    pub fn assemble(&self) -> Operator {
        let ib = Operator::identity(self.bath.dim());
        let is = Operator::identity(self.system.dim());
        let mut h = &kron(&self.system, &ib) + &kron(&is, &self.bath);
        h = &h + &self.interaction;
        h
    }
}

/// Every operator of a model at a single time.
#[derive(Clone, Debug)]
pub struct ModelArtifacts {
    pub t: f64,
    pub layout: DimensionLayout,
    pub system: Operator,
    pub bath: Operator,
    pub generator: Operator,
    pub uncoupled: Operator,
    pub total: Operator,
    pub dressed: DressedParts,
}

/// A driven system coupled to a static bath through `e^{igG}` with `G = B_s ⊗ B_b`.
pub trait CoupledModel: Sync {
    fn layout(&self) -> DimensionLayout;

    /// Dimensionless coupling strength g.
    fn coupling(&self) -> f64;

    fn system_hamiltonian(&self, t: f64) -> Result<Operator>;

    fn bath_hamiltonian(&self) -> &Operator;

    fn generator(&self) -> &ProductGenerator;

    /// `e^{igG}`.
    fn mapping(&self) -> &Operator;

    /// The strongly coupled composite Hamiltonian.
    fn total_hamiltonian(&self, t: f64) -> Result<Operator>;

    fn dressed_parts(&self, t: f64) -> Result<DressedParts>;

    /// Resolved parameters as key/value pairs, for output headers.
    fn describe(&self) -> Vec<(&'static str, String)>;

    fn uncoupled_hamiltonian(&self, t: f64) -> Result<Operator> {
        let layout = self.layout();
        let hs = self.system_hamiltonian(t)?;
        Ok(&kron(&hs, &Operator::identity(layout.bath)) + &kron(&Operator::identity(layout.system), self.bath_hamiltonian()))
    }

    fn artifacts(&self, t: f64) -> Result<ModelArtifacts> {
        Ok(ModelArtifacts {
            t,
            layout: self.layout(),
            system: self.system_hamiltonian(t)?,
            bath: self.bath_hamiltonian().clone(),
            generator: self.generator().full(),
            uncoupled: self.uncoupled_hamiltonian(t)?,
            total: self.total_hamiltonian(t)?,
            dressed: self.dressed_parts(t)?,
        })
    }
}
