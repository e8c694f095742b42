use std::fmt;
use std::str::FromStr;

use faer::Mat;

use super::{CoupledModel, DressedParts, ProductGenerator};
use crate::error::{Error, Result};
use crate::operators::{embed_site, herm_fn, kron, pauli, DimensionLayout, Operator};

/// Boundary condition of the transverse-field Ising bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Self::Open),
            "periodic" => Ok(Self::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Periodic => "periodic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinParams {
    pub lambda_x0: f64,
    pub lambda_z0: f64,
    pub alpha_x: f64,
    pub alpha_z: f64,
    pub omega_b: f64,
    pub h: f64,
    pub g: f64,
    pub n_bath: usize,
    pub boundary: Boundary,
}

impl Default for SpinParams {
    /// Driving and bath parameters of the reference spin protocol, at g = 0.3.
    fn default() -> Self {
        Self {
            lambda_x0: 1.0,
            lambda_z0: 2.5,
            alpha_x: 1.0,
            alpha_z: -0.6,
            omega_b: 1.0,
            h: 1.0,
            g: 0.3,
            n_bath: 6,
            boundary: Boundary::Open,
        }
    }
}

impl SpinParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bath == 0 {
            return Err(Error::InvalidParameter("n_bath must be at least 1".into()));
        }
        if self.n_bath > 12 {
            return Err(Error::InvalidParameter("n_bath above 12 exceeds dense storage".into()));
        }
        if !(self.g >= 0.0) {
            return Err(Error::InvalidParameter("g must be nonnegative".into()));
        }
        let finite = [self.lambda_x0, self.lambda_z0, self.alpha_x, self.alpha_z, self.omega_b, self.h, self.g];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("spin parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn lambda_x(&self, t: f64) -> f64 {
        self.lambda_x0 * (1.0 + self.alpha_x * t)
    }

    pub fn lambda_z(&self, t: f64) -> f64 {
        self.lambda_z0 * (1.0 + self.alpha_z * t)
    }

    /// Nearest-neighbour bonds of the bath chain.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_bath;
        let mut bonds: Vec<_> = (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            bonds.push((n - 1, 0));
        }
        bonds
    }
}

/// Central spin in a transverse-field Ising bath.
///
/// The mapping generator is `½σ_x ⊗ Σ_k σ_k^x`, i.e. the system spin operator
/// `J_x = σ_x/2` times the collective bath Pauli sum.
#[derive(Clone, Debug)]
pub struct SpinModel {
    params: SpinParams,
    layout: DimensionLayout,
    bath: Operator,
    bath_dressed: Operator,
    generator: ProductGenerator,
    mapping: Operator,
    // composite pieces: H = λx·sx + λz·(sz + iz) + fixed
    sx: Operator,
    sz: Operator,
    interaction_fixed: Operator,
    interaction_z: Operator,
    bath_embedded: Operator,
}

fn bath_site(op: &Operator, k: usize, n: usize) -> Result<Operator> {
    embed_site(op, k, n, 2)
}

fn sum_sites(op: &Operator, n: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(1 << n);
    for k in 0..n {
        acc = &acc + &bath_site(op, k, n)?;
    }
    Ok(acc)
}

impl SpinModel {
    pub fn new(params: SpinParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_bath;
        let db = 1usize << n;
        let layout = DimensionLayout::new(2, db)?;
        let (sx, sy, sz) = (pauli::x(), pauli::y(), pauli::z());

        let field = sum_sites(&sz, n)?;
        let mut bonds = Operator::zeros(db);
        for (k, j) in params.bonds() {
            bonds = &bonds + &(&bath_site(&sx, k, n)? * &bath_site(&sx, j, n)?).hermitian_part();
        }
        let bath = &field.scale_real(-params.omega_b) - &bonds.scale_real(params.h);
        let bath_dressed = &field.scale_real(-params.g.cos() * params.omega_b) - &bonds.scale_real(params.h);

        let collective_x = sum_sites(&sx, n)?;
        let collective_y = sum_sites(&sy, n)?;
        let generator = ProductGenerator::new(sx.scale_real(0.5), collective_x.clone())?;
        let mapping = generator.exp_i(params.g);

        let g = params.g;
        let cos_gs = herm_fn(&collective_x, |s| (g * s).cos())?;
        let sin_gs = herm_fn(&collective_x, |s| (g * s).sin())?;
        let ib = Operator::identity(db);
        let interaction_fixed = kron(&sx, &collective_y).scale_real(-params.omega_b * g.sin());
        let interaction_z = if g == 0.0 {
            Operator::zeros(2 * db)
        } else {
            &kron(&sz, &(&cos_gs - &ib)) + &kron(&sy, &sin_gs)
        };

        Ok(Self {
            layout,
            sx: kron(&sx, &ib),
            sz: kron(&sz, &ib),
            bath_embedded: kron(&Operator::identity(2), &bath_dressed),
            bath,
            bath_dressed,
            generator,
            mapping,
            interaction_fixed,
            interaction_z,
            params,
        })
    }

    pub fn params(&self) -> &SpinParams {
        &self.params
    }

    /// The interaction part of the strongly coupled Hamiltonian.
    pub fn interaction(&self, t: f64) -> Operator {
        let lz = self.params.lambda_z(t);
        let dim = self.layout.total();
        let (f, z) = (self.interaction_fixed.entries(), self.interaction_z.entries());
        let m = Mat::from_fn(dim, dim, |i, j| f[(i, j)] + z[(i, j)] * lz);
        Operator::hermitian(m).expect("interaction is Hermitian by construction")
    }
}

impl CoupledModel for SpinModel {
    fn layout(&self) -> DimensionLayout {
        self.layout
    }

    fn coupling(&self) -> f64 {
        self.params.g
    }

    fn system_hamiltonian(&self, t: f64) -> Result<Operator> {
        let (lx, lz) = (self.params.lambda_x(t), self.params.lambda_z(t));
        Ok(&pauli::x().scale_real(lx) + &pauli::z().scale_real(lz))
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

    fn total_hamiltonian(&self, t: f64) -> Result<Operator> {
        let (lx, lz) = (self.params.lambda_x(t), self.params.lambda_z(t));
        let dim = self.layout.total();
        let (sx, sz, b) = (self.sx.entries(), self.sz.entries(), self.bath_embedded.entries());
        let (f, z) = (self.interaction_fixed.entries(), self.interaction_z.entries());
        let m = Mat::from_fn(dim, dim, |i, j| {
            sx[(i, j)] * lx + sz[(i, j)] * lz + b[(i, j)] + f[(i, j)] + z[(i, j)] * lz
        });
        Operator::hermitian(m)
    }

    fn dressed_parts(&self, t: f64) -> Result<DressedParts> {
        Ok(DressedParts {
            system: self.system_hamiltonian(t)?,
            bath: self.bath_dressed.clone(),
            interaction: self.interaction(t),
        })
    }

    fn describe(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("model", "spin".into()),
            ("lambda_x0", p.lambda_x0.to_string()),
            ("lambda_z0", p.lambda_z0.to_string()),
            ("alpha_x", p.alpha_x.to_string()),
            ("alpha_z", p.alpha_z.to_string()),
            ("omega_b", p.omega_b.to_string()),
            ("h", p.h.to_string()),
            ("g", p.g.to_string()),
            ("n_bath", p.n_bath.to_string()),
            ("boundary", p.boundary.to_string()),
            ("generator", "0.5*sx (x) sum_k sx_k".into()),
        ]
    }
}
