use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use super::eigen::hermitian_eigen;
use super::{Basis, LinalgError, LinearOperator, StateVector};
use crate::scalar::Real;

/// Which tensor factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    System,
    Bath,
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity (1e-12), trace (1e-10) and positivity (−1e-10).
    pub fn new(dim: usize, data: Vec<Complex<T>>) -> Result<Self, LinalgError> {
        let rho = Self::unchecked(dim, data)?;
        rho.validate()?;
        Ok(rho)
    }

    fn unchecked(dim: usize, data: Vec<Complex<T>>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim || dim == 0 {
            return Err(LinalgError::DimensionMismatch { expected: dim * dim, actual: data.len() });
        }
        Ok(Self { dim, data })
    }

    fn validate(&self) -> Result<(), LinalgError> {
        let n = self.dim;
        let mut dev = T::zero();
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        if dev > T::lit(1e-12) {
            return Err(LinalgError::InvalidDensity(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::lit(1e-10) || tr.im.abs() > T::lit(1e-10) {
            return Err(LinalgError::InvalidDensity(format!("trace {} + {}i", tr.re, tr.im)));
        }
        let min = self.eigenvalues()?.first().copied().unwrap_or(T::zero());
        if min < T::lit(-1e-10) {
            return Err(LinalgError::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn from_pure(state: &StateVector<T>) -> Result<Self, LinalgError> {
        let psi = state.normalized()?;
        let a = psi.amplitudes();
        let n = a.len();
        let mut data = vec![Complex::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = a[i] * a[j].conj();
            }
        }
        Self::new(n, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self.data[i * self.dim + i])
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> T {
        // ρ Hermitian: tr ρ² = Σ |ρ_ij|².
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>, LinalgError> {
        let op = LinearOperator::dense(Arc::new(Basis::Indexed { dim: self.dim }), self.data.clone(), true)?;
        Ok(hermitian_eigen(&op)?.values)
    }

    /// `−tr ρ ln ρ`, dropping eigenvalues below 1e-300.
    pub fn von_neumann_entropy(&self) -> Result<T, LinalgError> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .filter(|&p| p > T::lit(1e-300))
            .map(|p| -p * p.ln())
            .sum())
    }

    /// ρ_s ⊗ ρ_b, left factor index major.
    pub fn tensor(&self, other: &Self) -> Result<Self, LinalgError> {
        let (na, nb) = (self.dim, other.dim);
        let n = na * nb;
        let mut data = vec![Complex::zero(); n * n];
        for i in 0..na {
            for j in 0..na {
                let a = self.get(i, j);
                for k in 0..nb {
                    for l in 0..nb {
                        data[(i * nb + k) * n + j * nb + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self::new(n, data)
    }

    /// Expectation `tr(ρ A)`.
    pub fn expectation(&self, op: &LinearOperator<T>) -> Result<Complex<T>, LinalgError> {
        if op.dim() != self.dim {
            return Err(LinalgError::DimensionMismatch { expected: self.dim, actual: op.dim() });
        }
        let mut acc = Complex::zero();
        op.for_each_nonzero(|i, j, a| acc += a * self.get(j, i));
        Ok(acc)
    }
}

/// Traces out one factor of a `d_sys × d_bath` bipartition.
pub fn partial_trace<T: Real>(
    rho: &DensityMatrix<T>,
    dims: (usize, usize),
    keep: Keep,
) -> Result<DensityMatrix<T>, LinalgError> {
    let (ds, db) = dims;
    if ds * db != rho.dim() {
        return Err(LinalgError::FactorMismatch { dim: rho.dim(), d_sys: ds, d_bath: db });
    }
    let at = |s: usize, b: usize, s2: usize, b2: usize| rho.get(s * db + b, s2 * db + b2);
    let out = match keep {
        Keep::System => {
            let mut out = vec![Complex::zero(); ds * ds];
            for i in 0..ds {
                for j in 0..ds {
                    out[i * ds + j] = (0..db).fold(Complex::zero(), |acc, k| acc + at(i, k, j, k));
                }
            }
            DensityMatrix::unchecked(ds, out)?
        }
        Keep::Bath => {
            let mut out = vec![Complex::zero(); db * db];
            for i in 0..db {
                for j in 0..db {
                    out[i * db + j] = (0..ds).fold(Complex::zero(), |acc, k| acc + at(k, i, k, j));
                }
            }
            DensityMatrix::unchecked(db, out)?
        }
    };
    out.validate()?;
    Ok(out)
}

/// Reduced state of a pure bipartite state without forming the full
/// density matrix.
pub fn reduced_from_pure<T: Real>(
    psi: &StateVector<T>,
    dims: (usize, usize),
    keep: Keep,
) -> Result<DensityMatrix<T>, LinalgError> {
    let (ds, db) = dims;
    if ds * db != psi.dim() {
        return Err(LinalgError::FactorMismatch { dim: psi.dim(), d_sys: ds, d_bath: db });
    }
    let psi = psi.normalized()?;
    let a = psi.amplitudes();
    let out = match keep {
        Keep::System => {
            let mut out = vec![Complex::zero(); ds * ds];
            for i in 0..ds {
                for j in 0..ds {
                    out[i * ds + j] =
                        (0..db).fold(Complex::zero(), |acc, k| acc + a[i * db + k] * a[j * db + k].conj());
                }
            }
            DensityMatrix::unchecked(ds, out)?
        }
        Keep::Bath => {
            let mut out = vec![Complex::zero(); db * db];
            for i in 0..db {
                for j in 0..db {
                    out[i * db + j] =
                        (0..ds).fold(Complex::zero(), |acc, k| acc + a[k * db + i] * a[k * db + j].conj());
                }
            }
            DensityMatrix::unchecked(db, out)?
        }
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn invariants_enforced() {
        assert!(DensityMatrix::new(2, vec![c(0.5), c(0.0), c(0.0), c(0.6)]).is_err());
        assert!(DensityMatrix::new(2, vec![c(1.2), c(0.0), c(0.0), c(-0.2)]).is_err());
        assert!(DensityMatrix::new(2, vec![c(0.5), c(0.1), c(0.0), c(0.5)]).is_err());
        assert!(DensityMatrix::new(2, vec![c(0.5), c(0.5), c(0.5), c(0.5)]).is_ok());
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::<f64>::from_real(&[s, 0.0, 0.0, s]).unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let red = partial_trace(&rho, (2, 2), Keep::System).unwrap();
        assert!((red.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((red.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(red.get(0, 1).norm() < 1e-15);
        assert!((red.von_neumann_entropy().unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn factor_mismatch() {
        let rho = DensityMatrix::new(2, vec![c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert!(matches!(partial_trace(&rho, (2, 2), Keep::System), Err(LinalgError::FactorMismatch { .. })));
    }
}
