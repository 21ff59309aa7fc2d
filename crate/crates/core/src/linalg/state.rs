use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use super::{Basis, LinalgError};
use crate::scalar::Real;

/// Complex amplitude vector over a labelled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    basis: Arc<Basis>,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(basis: Arc<Basis>, amplitudes: Vec<Complex<T>>) -> Result<Self, LinalgError> {
        if amplitudes.is_empty() {
            return Err(LinalgError::EmptyState);
        }
        if basis.dim() != amplitudes.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: basis.dim(),
                actual: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    /// State over an anonymous `Indexed` basis.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self, LinalgError> {
        let basis = Arc::new(Basis::Indexed { dim: amplitudes.len() });
        Self::new(basis, amplitudes)
    }

    pub fn from_real(values: &[f64]) -> Result<Self, LinalgError> {
        Self::from_amplitudes(values.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
    }

    pub fn basis_vector(basis: Arc<Basis>, index: usize) -> Result<Self, LinalgError> {
        let dim = basis.dim();
        if index >= dim {
            return Err(LinalgError::DimensionMismatch { expected: dim, actual: index + 1 });
        }
        let mut amplitudes = vec![Complex::zero(); dim];
        amplitudes[index] = Complex::one();
        Self::new(basis, amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amplitudes)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let n2 = self.norm_sqr();
        if !(n2 > T::lit(1e-300)) || !n2.is_finite() {
            return Err(LinalgError::VanishedNorm { norm_sqr: n2.to_f64().unwrap_or(f64::NAN) });
        }
        let inv = T::one() / n2.sqrt();
        Ok(self.map(|a| a * inv))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        self.map(|a| a * factor)
    }

    fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { basis: self.basis.clone(), amplitudes: self.amplitudes.iter().map(|&a| f(a)).collect() }
    }

    /// Kronecker product; `self` is the slow (left) factor.
    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|&a| other.amplitudes.iter().map(move |&b| a * b))
            .collect();
        Self {
            basis: Arc::new(Basis::Product(self.basis.clone(), other.basis.clone())),
            amplitudes,
        }
    }
}

pub(crate) fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert_eq!(StateVector::<f64>::from_amplitudes(vec![]), Err(LinalgError::EmptyState));
        let b = Arc::new(Basis::Indexed { dim: 3 });
        assert!(matches!(
            StateVector::<f64>::new(b, vec![Complex::zero(); 2]),
            Err(LinalgError::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn normalizing_zero_vector_fails() {
        let z = StateVector::<f64>::from_real(&[0.0, 0.0]).unwrap();
        assert!(matches!(z.normalized(), Err(LinalgError::VanishedNorm { .. })));
    }

    #[test]
    fn tensor_of_basis_states() {
        let a = StateVector::<f64>::from_real(&[1.0, 0.0]).unwrap();
        let b = StateVector::<f64>::from_real(&[0.0, 1.0]).unwrap();
        let ab = a.tensor(&b);
        let expect = [0.0, 1.0, 0.0, 0.0];
        for (x, e) in ab.amplitudes().iter().zip(expect) {
            assert_eq!(x.re, e);
            assert_eq!(x.im, 0.0);
        }
        assert_eq!(ab.basis().dim(), 4);
    }
}
