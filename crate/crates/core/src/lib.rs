//! Quantum thermodynamics at arbitrary system-bath coupling.
//!
//! A strongly coupled composite Hamiltonian is related to an uncoupled one by a
//! unitary mapping `e^{igG}`. This crate builds two finite models with that
//! structure, propagates them, and evaluates work, heat, entropy and the
//! two-point-measurement fluctuation theorems.

pub mod error;
pub mod evolution;
pub mod fluctuation;
pub mod models;
pub mod operators;
pub mod thermo;

pub use error::{Error, Result};
pub use faer::c64;
