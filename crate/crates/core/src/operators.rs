//! Dense complex operators on finite Hilbert spaces.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Maximum elementwise deviation from self-adjointness accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum elementwise deviation of `U U^†` from the identity accepted as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    General,
    Hermitian,
    Unitary,
}

/// Square complex matrix tagged with the structure it is known to have.
#[derive(Clone, Debug)]
pub struct Operator {
    entries: Mat<c64>,
    structure: Structure,
}

fn check_square(m: MatRef<'_, c64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn hermitian_part(m: MatRef<'_, c64>) -> Mat<c64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

impl Operator {
    /// Wraps a square matrix without any structural claim.
    pub fn new(entries: Mat<c64>) -> Result<Self> {
        check_square(entries.as_ref())?;
        Ok(Self { entries, structure: Structure::General })
    }

    /// Wraps a matrix that must be Hermitian within [`HERMITIAN_TOL`]; the stored copy is symmetrized.
    pub fn hermitian(entries: Mat<c64>) -> Result<Self> {
        check_square(entries.as_ref())?;
        let deviation = hermiticity_deviation(entries.as_ref());
        if deviation > HERMITIAN_TOL {
            return Err(Error::Hermiticity { deviation });
        }
        Ok(Self { entries: hermitian_part(entries.as_ref()), structure: Structure::Hermitian })
    }

    /// Wraps a matrix that must be unitary within [`UNITARY_TOL`].
    pub fn unitary(entries: Mat<c64>) -> Result<Self> {
        check_square(entries.as_ref())?;
        let deviation = unitarity_deviation(entries.as_ref());
        if deviation > UNITARY_TOL {
            return Err(Error::Unitarity { deviation });
        }
        Ok(Self { entries, structure: Structure::Unitary })
    }

    pub(crate) fn from_parts(entries: Mat<c64>, structure: Structure) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self { entries, structure }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: Mat::identity(dim, dim), structure: Structure::Unitary }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: Mat::zeros(dim, dim), structure: Structure::Hermitian }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self { entries: Mat::from_fn(dim, dim, f), structure: Structure::General }
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let entries =
            Mat::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) });
        Self { entries, structure: Structure::Hermitian }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn is_hermitian(&self) -> bool {
        self.structure == Structure::Hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.entries[(i, j)]
    }

    /// Re-tags the operator after validating the claimed structure.
    pub fn with_structure(self, structure: Structure) -> Result<Self> {
        match structure {
            Structure::General => Ok(Self { structure, ..self }),
            Structure::Hermitian => Self::hermitian(self.entries),
            Structure::Unitary => Self::unitary(self.entries),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint().to_owned(), structure: self.structure }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }

    /// Tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Operator) -> Result<c64> {
        same_dim(self, other)?;
        let n = self.dim();
        let mut acc = c64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                acc += self.entries[(i, j)] * other.entries[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Re Tr(self · other); the natural expectation value for Hermitian pairs.
    pub fn expectation(&self, observable: &Operator) -> Result<f64> {
        Ok(self.trace_product(observable)?.re)
    }

    pub fn scale(&self, factor: c64) -> Self {
        let structure = if factor.im == 0.0 && self.structure == Structure::Hermitian {
            Structure::Hermitian
        } else {
            Structure::General
        };
        let entries = Mat::from_fn(self.dim(), self.dim(), |i, j| self.entries[(i, j)] * factor);
        Self { entries, structure }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(c64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        same_dim(self, other)?;
        let structure = if self.structure == Structure::Unitary && other.structure == Structure::Unitary {
            Structure::Unitary
        } else {
            Structure::General
        };
        Ok(Self { entries: &self.entries * &other.entries, structure })
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        same_dim(self, other)?;
        Ok(self.combine(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Self> {
        same_dim(self, other)?;
        Ok(self.combine(other, |a, b| a - b))
    }

    fn combine(&self, other: &Operator, f: impl Fn(c64, c64) -> c64) -> Self {
        let structure = if self.structure == Structure::Hermitian && other.structure == Structure::Hermitian {
            Structure::Hermitian
        } else {
            Structure::General
        };
        let entries =
            Mat::from_fn(self.dim(), self.dim(), |i, j| f(self.entries[(i, j)], other.entries[(i, j)]));
        Self { entries, structure }
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.entries[(i, j)].norm());
            }
        }
        m
    }

    /// Max-norm distance; panics if dimensions differ.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in max_abs_diff");
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.entries[(i, j)] - other.entries[(i, j)]).norm());
            }
        }
        m
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(self.entries.as_ref())
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(self.entries.as_ref())
    }

    /// (A + A^†)/2 tagged Hermitian, regardless of how far A was from it.
    pub fn hermitian_part(&self) -> Self {
        Self { entries: hermitian_part(self.entries.as_ref()), structure: Structure::Hermitian }
    }

    /// Spectral decomposition; the input must be Hermitian within tolerance.
    pub fn eigh(&self) -> Result<HermitianEigen> {
        let sym;
        let entries = if self.structure == Structure::Hermitian {
            self.entries.as_ref()
        } else {
            let deviation = self.hermiticity_deviation();
            if deviation > HERMITIAN_TOL {
                return Err(Error::Hermiticity { deviation });
            }
            sym = hermitian_part(self.entries.as_ref());
            sym.as_ref()
        };
        let eig = entries.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let s = eig.S().column_vector();
        let values = (0..s.nrows()).map(|i| s[i].re).collect();
        Ok(HermitianEigen { values, vectors: eig.U().to_owned() })
    }
}

fn same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

fn hermiticity_deviation(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn unitarity_deviation(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    dev
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator dimensions must agree")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions must agree")
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale_real(self)
    }
}

impl Mul<&Operator> for c64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

/// Eigenvalues and orthonormal eigenvectors (columns) of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// V · diag(f(ε)) · V^†.
    pub fn reconstruct(&self, f: impl Fn(f64) -> c64) -> Mat<c64> {
        let n = self.dim();
        let weights: Vec<c64> = self.values.iter().map(|&e| f(e)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * weights[j]);
        &scaled * self.vectors.adjoint()
    }

    /// Real function of the operator; the result is Hermitian.
    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> Operator {
        Operator::from_parts(hermitian_part(self.reconstruct(|e| c64::new(f(e), 0.0)).as_ref()), Structure::Hermitian)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// exp(scale · h) through the eigendecomposition of h.
pub fn herm_exp(h: &Operator, scale: c64) -> Result<Operator> {
    let eig = h.eigh()?;
    Ok(exp_from_eigen(&eig, scale))
}

/// exp(scale · h) for an already diagonalized h.
pub fn exp_from_eigen(eig: &HermitianEigen, scale: c64) -> Operator {
    if scale == c64::new(0.0, 0.0) {
        return Operator::from_parts(Mat::identity(eig.dim(), eig.dim()), Structure::Unitary);
    }
    let entries = eig.reconstruct(|e| (scale * e).exp());
    if scale.re == 0.0 {
        Operator::from_parts(entries, Structure::Unitary)
    } else if scale.im == 0.0 {
        Operator::from_parts(hermitian_part(entries.as_ref()), Structure::Hermitian)
    } else {
        Operator::from_parts(entries, Structure::General)
    }
}

/// f(h) for a real scalar function f.
pub fn herm_fn(h: &Operator, f: impl Fn(f64) -> f64) -> Result<Operator> {
    Ok(h.eigh()?.map_real(f))
}

/// u · a · u^†.
pub fn conjugate(u: &Operator, a: &Operator) -> Result<Operator> {
    same_dim(u, a)?;
    if u.structure != Structure::Unitary {
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::Unitarity { deviation });
        }
    }
    let entries = &(&u.entries * &a.entries) * u.entries.adjoint();
    Ok(match a.structure {
        Structure::Hermitian => Operator::from_parts(hermitian_part(entries.as_ref()), Structure::Hermitian),
        s => Operator::from_parts(entries, s),
    })
}

/// a ⊗ b with the first factor as the slow index.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let structure = match (a.structure, b.structure) {
        (Structure::Hermitian, Structure::Hermitian) => Structure::Hermitian,
        (Structure::Unitary, Structure::Unitary) => Structure::Unitary,
        _ => Structure::General,
    };
    Operator::from_parts(a.entries.as_ref().kron(b.entries.as_ref()), structure)
}

/// Left-to-right tensor product of a nonempty list.
pub fn kron_all(factors: &[&Operator]) -> Operator {
    let (first, rest) = factors.split_first().expect("kron_all needs at least one factor");
    rest.iter().fold((*first).clone(), |acc, f| kron(&acc, f))
}

/// I ⊗ … ⊗ op ⊗ … ⊗ I with `op` at position `site`.
pub fn embed_site(op: &Operator, site: usize, n_sites: usize, local_dim: usize) -> Result<Operator> {
    if site >= n_sites {
        return Err(Error::SiteIndex { site, n_sites });
    }
    if op.dim() != local_dim {
        return Err(Error::DimensionMismatch { expected: local_dim, found: op.dim() });
    }
    let left = Operator::identity(local_dim.pow(site as u32));
    let right = Operator::identity(local_dim.pow((n_sites - site - 1) as u32));
    let mut out = kron(&kron(&left, op), &right);
    out.structure = op.structure;
    Ok(out)
}

/// Split of a composite space into system ⊗ bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionLayout {
    pub system: usize,
    pub bath: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Bath,
}

impl DimensionLayout {
    pub fn new(system: usize, bath: usize) -> Result<Self> {
        if system == 0 || bath == 0 {
            return Err(Error::InvalidParameter("subsystem dimensions must be positive".into()));
        }
        Ok(Self { system, bath })
    }

    pub fn total(&self) -> usize {
        self.system * self.bath
    }

    pub fn check(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.total() {
            return Err(Error::DimensionMismatch { expected: self.total(), found: op.dim() });
        }
        Ok(())
    }
}

/// Reduced operator on the kept subsystem.
pub fn partial_trace(rho: &Operator, layout: DimensionLayout, keep: Subsystem) -> Result<Operator> {
    layout.check(rho)?;
    let (ds, db) = (layout.system, layout.bath);
    let m = rho.entries();
    let entries = match keep {
        Subsystem::System => Mat::from_fn(ds, ds, |a, b| (0..db).map(|k| m[(a * db + k, b * db + k)]).sum()),
        Subsystem::Bath => Mat::from_fn(db, db, |k, l| (0..ds).map(|a| m[(a * db + k, a * db + l)]).sum()),
    };
    let structure = if rho.structure == Structure::Hermitian { Structure::Hermitian } else { Structure::General };
    Ok(Operator::from_parts(entries, structure))
}

pub mod pauli {
    use super::*;

    fn real(rows: [[f64; 2]; 2]) -> Operator {
        Operator::from_parts(Mat::from_fn(2, 2, |i, j| c64::new(rows[i][j], 0.0)), Structure::Hermitian)
    }

    pub fn x() -> Operator {
        real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> Operator {
        let entries = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(0.0, -1.0),
            (1, 0) => c64::new(0.0, 1.0),
            _ => c64::new(0.0, 0.0),
        });
        Operator::from_parts(entries, Structure::Hermitian)
    }

    pub fn z() -> Operator {
        real([[1.0, 0.0], [0.0, -1.0]])
    }
}

/// Truncated bosonic annihilation operator on Fock states 0..=n_max.
pub fn annihilation(n_max: usize) -> Operator {
    let n = n_max + 1;
    Operator::from_fn(n, |i, j| if j == i + 1 { c64::new((j as f64).sqrt(), 0.0) } else { c64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering_puts_system_first() {
        let zi = kron(&pauli::z(), &Operator::identity(2));
        let diag: Vec<f64> = (0..4).map(|i| zi.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn xx_flips_both_bits() {
        let xx = kron(&pauli::x(), &pauli::x());
        for i in 0..4 {
            let expected = if i == 3 { 1.0 } else { 0.0 };
            assert_eq!(xx.get(i, 0).re, expected);
        }
    }

    #[test]
    fn embed_rejects_bad_site() {
        let err = embed_site(&pauli::x(), 2, 2, 2).unwrap_err();
        assert!(err.to_string().contains("site index"));
    }

    #[test]
    fn herm_exp_rejects_non_hermitian() {
        let a = annihilation(3);
        let err = herm_exp(&a, c64::new(0.0, 1.0)).unwrap_err();
        assert!(err.to_string().contains("hermiticity violated"));
    }

    #[test]
    fn hermitian_within_tolerance_is_symmetrized() {
        let mut m = pauli::x().into_entries();
        m[(0, 1)] += c64::new(5e-13, 0.0);
        let op = Operator::hermitian(m).unwrap();
        assert_eq!(op.hermiticity_deviation(), 0.0);
    }

    #[test]
    fn partial_trace_of_maximally_mixed() {
        let rho = Operator::identity(4).scale_real(0.25);
        let layout = DimensionLayout::new(2, 2).unwrap();
        let rb = partial_trace(&rho, layout, Subsystem::Bath).unwrap();
        assert!(rb.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        let layout = DimensionLayout::new(2, 3).unwrap();
        assert!(partial_trace(&Operator::identity(4), layout, Subsystem::System).is_err());
    }
}
