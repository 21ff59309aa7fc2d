//! Finite-dimensional complex linear algebra.
//!
//! Kronecker convention: in `a ⊗ b` the index of `a` varies slowest, so
//! `(a ⊗ b)[i·dim(b) + k] = a[i]·b[k]`.

mod basis;
mod density;
pub mod eigen;
mod error;
mod operator;
mod state;

use num_complex::Complex;
use num_traits::Zero;

pub use basis::{Basis, BasisLabel};
pub use density::{partial_trace, reduced_from_pure, DensityMatrix, Keep};
pub use eigen::{ground_state, hermitian_eigen, lowest_eigenpairs, HermitianEigen};
pub use error::LinalgError;
pub use operator::{Band, LinearOperator, Storage, DEFAULT_MAX_DIM};
pub use state::StateVector;

use crate::scalar::Real;

/// `⟨ψ|Ô|ψ⟩ / ⟨ψ|ψ⟩`.
///
/// For operators flagged Hermitian the imaginary part is dropped when it is
/// below 1e-10; otherwise the full complex value is returned.
pub fn expectation_normalized<T: Real>(
    state: &StateVector<T>,
    op: &LinearOperator<T>,
) -> Result<Complex<T>, LinalgError> {
    expectation_raw(state.amplitudes(), op, op.is_hermitian())
}

pub(crate) fn expectation_raw<T: Real>(
    psi: &[Complex<T>],
    op: &LinearOperator<T>,
    hermitian: bool,
) -> Result<Complex<T>, LinalgError> {
    if psi.len() != op.dim() {
        return Err(LinalgError::DimensionMismatch { expected: op.dim(), actual: psi.len() });
    }
    let n2 = state::norm_sqr(psi);
    if !(n2 > T::lit(1e-300)) || !n2.is_finite() {
        return Err(LinalgError::VanishedNorm { norm_sqr: n2.to_f64().unwrap_or(f64::NAN) });
    }
    let mut acc = Complex::zero();
    op.for_each_nonzero(|i, j, a| acc += psi[i].conj() * a * psi[j]);
    let mut val = acc / n2;
    if hermitian && val.im.abs() < T::lit(1e-10) {
        val.im = T::zero();
    }
    Ok(val)
}

/// Kronecker product of two objects of the same kind.
pub trait TensorProduct: Sized {
    fn tensor_product(&self, other: &Self) -> Result<Self, LinalgError>;
}

impl<T: Real> TensorProduct for StateVector<T> {
    fn tensor_product(&self, other: &Self) -> Result<Self, LinalgError> {
        let dim = self.dim().saturating_mul(other.dim());
        if dim > DEFAULT_MAX_DIM {
            return Err(LinalgError::DimensionOverflow { dim, max: DEFAULT_MAX_DIM });
        }
        Ok(self.tensor(other))
    }
}

impl<T: Real> TensorProduct for LinearOperator<T> {
    fn tensor_product(&self, other: &Self) -> Result<Self, LinalgError> {
        self.tensor(other)
    }
}

pub fn tensor_product<X: TensorProduct>(a: &X, b: &X) -> Result<X, LinalgError> {
    a.tensor_product(b)
}
