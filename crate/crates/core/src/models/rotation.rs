use faer::c64;

use crate::error::{Error, Result};
use crate::operators::{conjugate, embed_site, herm_exp, herm_fn, kron, pauli, Operator};

fn collective(op: &Operator, n: usize, scale: f64) -> Result<Operator> {
    let mut acc = Operator::zeros(1 << n);
    for k in 0..n {
        acc = &acc + &embed_site(op, k, n, 2)?;
    }
    Ok(acc.scale_real(scale))
}

/// Max-norm residual of
/// `exp(ig Σx Jx) Jz exp(−ig Σx Jx) = Jz cos(g Σx) + Jy sin(g Σx)`,
/// with `J = ½ Σσ` over `n_rotated` spins and `Σx` the Pauli sum over
/// `n_generator` spins (the second tensor factor).
pub fn rotation_identity_residual(g: f64, n_rotated: usize, n_generator: usize) -> Result<f64> {
    if n_rotated == 0 || n_generator == 0 {
        return Err(Error::InvalidParameter("rotation identity needs at least one spin on each side".into()));
    }
    let jx = collective(&pauli::x(), n_rotated, 0.5)?;
    let jy = collective(&pauli::y(), n_rotated, 0.5)?;
    let jz = collective(&pauli::z(), n_rotated, 0.5)?;
    let sigma = collective(&pauli::x(), n_generator, 1.0)?;
    let other = Operator::identity(sigma.dim());

    let rotation = herm_exp(&kron(&jx, &sigma), c64::new(0.0, g))?;
    let lhs = conjugate(&rotation, &kron(&jz, &other))?;
    let cos = herm_fn(&sigma, |s| (g * s).cos())?;
    let sin = herm_fn(&sigma, |s| (g * s).sin())?;
    let rhs = &kron(&jz, &cos) + &kron(&jy, &sin);
    Ok(lhs.max_abs_diff(&rhs))
}
