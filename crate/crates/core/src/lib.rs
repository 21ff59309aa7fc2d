//! Numerical experiments on spontaneous symmetry breaking and spontaneous
//! unitarity violation.
//!
//! The crate is layered:
//!
//! * [`linalg`] and [`ode`]: scalar-generic complex linear algebra, Hermitian
//!   eigensolvers and an adaptive Runge–Kutta integrator.
//! * [`models`]: the planar quantum rotor and the transverse-field Ising
//!   chain, packaged as [`models::ModelBundle`]s.
//! * [`equilibrium`], [`dynamics`], [`bath`], [`pencil`]: the experiments.
//!
//! Physics code is written in `f64`; the aliases below fix the scalar.
//! Units: ħ = 1.

pub mod bath;
pub mod dynamics;
pub mod equilibrium;
pub mod fit;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod pencil;
pub mod scalar;

pub use num_complex::Complex;
pub use scalar::Real;

pub type C64 = Complex<f64>;
pub type StateVector = linalg::StateVector<f64>;
pub type LinearOperator = linalg::LinearOperator<f64>;
pub type DensityMatrix = linalg::DensityMatrix<f64>;
pub type HermitianEigen = linalg::HermitianEigen<f64>;
