//! Quasi-exact spectra of the asymmetric two-photon Rabi model
//!
//! The model `H = Δσx + εσz + ω a†a + λσz(a†² + a²)` is mapped to a fourth-order
//! ODE in Bargmann space. A Gaussian gauge `φ₁ = exp(αz²)φ` with `α` chosen to
//! kill the `z⁴` potential term leaves an operator that admits polynomial
//! eigenfunctions on constraint surfaces in parameter space. This crate builds
//! that operator exactly in coefficient space, solves the Bethe ansatz
//! equations for the polynomial roots, and cross-checks everything against
//! independent oracles (companion matrices, linear null spaces, and a truncated
//! Fock-space diagonalization).

pub mod alpha;
pub mod bethe;
pub mod error;
pub mod fock;
pub mod identities;
pub mod ode;
pub mod params;
pub mod poly;
pub mod roots;

pub use alpha::{admissible, AlphaBranch};
pub use bethe::{BetheState, Physicality, SolverConfig};
pub use error::{Error, Result};
pub use fock::FockMatrix;
pub use ode::OdeCoefficients;
pub use params::{LambdaRatio, ModelParams};
pub use poly::ComplexPolynomial;

/// Complex scalar used for α, energies and Bethe roots.
pub type ComplexScalar = num_complex::Complex64;
