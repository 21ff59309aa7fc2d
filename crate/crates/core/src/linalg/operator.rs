use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};

use super::{Basis, LinalgError, StateVector};
use crate::scalar::Real;

/// Kronecker products larger than this are rejected unless a larger limit is
/// passed explicitly.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

/// Diagonal band storage.
///
/// `diagonals[k]` holds offset `d = k - lower`; entry `(i, i + d)` lives at
/// position `min(i, i + d)` of that diagonal, which has length `n - |d|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Band<T: Real> {
    lower: usize,
    upper: usize,
    diagonals: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Band<T> {
    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    /// Diagonal at signed offset `d` (column minus row).
    pub fn diagonal(&self, d: isize) -> Option<&[Complex<T>]> {
        let k = d + self.lower as isize;
        if k < 0 || d > self.upper as isize {
            return None;
        }
        Some(&self.diagonals[k as usize])
    }
}

/// Compressed sparse rows; columns ascend within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T: Real> {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> Csr<T> {
    /// Sums duplicate entries and drops exact zeros.
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex<T>)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_start = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<Complex<T>> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(t.len());
        for (i, j, z) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += z;
            } else {
                cols.push(j);
                vals.push(z);
                rows.push(i);
                last = Some((i, j));
            }
        }
        let keep: Vec<bool> = vals.iter().map(|z| !z.is_zero()).collect();
        let mut k = 0;
        cols.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        rows.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        vals.retain(|z| !z.is_zero());
        for &i in &rows {
            row_start[i + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self { row_start, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[Complex<T>]) {
        let r = self.row_start[i]..self.row_start[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    fn get(&self, i: usize, j: usize) -> Complex<T> {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(Complex::zero(), |k| v[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage<T: Real> {
    /// Row-major `n × n`.
    Dense(Vec<Complex<T>>),
    Banded(Band<T>),
    Sparse(Csr<T>),
}

/// Square complex matrix acting on a labelled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator<T: Real> {
    basis: Arc<Basis>,
    storage: Storage<T>,
    hermitian: bool,
}

fn hermitian_tolerance<T: Real>(scale: T) -> T {
    let floor = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    floor * scale.max(T::one())
}

impl<T: Real> LinearOperator<T> {
    pub fn dense(basis: Arc<Basis>, data: Vec<Complex<T>>, hermitian: bool) -> Result<Self, LinalgError> {
        let n = basis.dim();
        if data.len() != n * n {
            return Err(LinalgError::DimensionMismatch { expected: n * n, actual: data.len() });
        }
        Self { basis, storage: Storage::Dense(data), hermitian }.checked()
    }

    /// Dense operator built from a row-major real table over an anonymous basis.
    pub fn from_real_rows(rows: &[&[f64]], hermitian: bool) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, actual: r.len() });
            }
            data.extend(r.iter().map(|&x| Complex::new(T::lit(x), T::zero())));
        }
        Self::dense(Arc::new(Basis::Indexed { dim: n }), data, hermitian)
    }

    /// Band matrix; `diagonals` ordered from offset `-lower` to `+upper`.
    pub fn banded(
        basis: Arc<Basis>,
        lower: usize,
        upper: usize,
        diagonals: Vec<Vec<Complex<T>>>,
        hermitian: bool,
    ) -> Result<Self, LinalgError> {
        let n = basis.dim();
        if diagonals.len() != lower + upper + 1 {
            return Err(LinalgError::BadBand(format!(
                "expected {} diagonals, got {}",
                lower + upper + 1,
                diagonals.len()
            )));
        }
        if (lower > 0 && lower >= n) || (upper > 0 && upper >= n) {
            return Err(LinalgError::BadBand(format!("bandwidth ({lower}, {upper}) too wide for dimension {n}")));
        }
        for (k, diag) in diagonals.iter().enumerate() {
            let d = k as isize - lower as isize;
            let want = n - d.unsigned_abs();
            if diag.len() != want {
                return Err(LinalgError::BadBand(format!("diagonal {d} has length {} (want {want})", diag.len())));
            }
        }
        Self { basis, storage: Storage::Banded(Band { lower, upper, diagonals }), hermitian }.checked()
    }

    /// Sparse operator from `(row, column, value)` entries; duplicates add.
    pub fn sparse(
        basis: Arc<Basis>,
        entries: Vec<(usize, usize, Complex<T>)>,
        hermitian: bool,
    ) -> Result<Self, LinalgError> {
        let n = basis.dim();
        if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(LinalgError::DimensionMismatch { expected: n, actual: i.max(j) + 1 });
        }
        Self { basis, storage: Storage::Sparse(Csr::from_triplets(n, entries)), hermitian }.checked()
    }

    pub fn diagonal(basis: Arc<Basis>, values: Vec<Complex<T>>, hermitian: bool) -> Result<Self, LinalgError> {
        Self::banded(basis, 0, 0, vec![values], hermitian)
    }

    pub fn real_diagonal(basis: Arc<Basis>, values: impl IntoIterator<Item = T>) -> Result<Self, LinalgError> {
        let v = values.into_iter().map(|x| Complex::new(x, T::zero())).collect();
        Self::diagonal(basis, v, true)
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let n = basis.dim();
        Self::diagonal(basis, vec![Complex::one(); n], true).expect("identity is well formed")
    }

    fn checked(self) -> Result<Self, LinalgError> {
        if self.hermitian {
            let dev = self.adjoint_deviation();
            if !(dev <= hermitian_tolerance(self.max_abs())) {
                return Err(LinalgError::NotHermitian { deviation: dev.to_f64().unwrap_or(f64::NAN) });
            }
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        let n = self.dim();
        match &self.storage {
            Storage::Dense(a) => a[i * n + j],
            Storage::Banded(b) => {
                let d = j as isize - i as isize;
                match b.diagonal(d) {
                    Some(diag) => diag[i.min(j)],
                    None => Complex::zero(),
                }
            }
            Storage::Sparse(c) => c.get(i, j),
        }
    }

    pub fn max_abs(&self) -> T {
        let vals: Box<dyn Iterator<Item = &Complex<T>>> = match &self.storage {
            Storage::Dense(a) => Box::new(a.iter()),
            Storage::Banded(b) => Box::new(b.diagonals.iter().flatten()),
            Storage::Sparse(c) => Box::new(c.vals.iter()),
        };
        vals.fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn adjoint_deviation(&self) -> T {
        let n = self.dim();
        let mut dev = T::zero();
        match &self.storage {
            Storage::Dense(a) => {
                for i in 0..n {
                    for j in i..n {
                        dev = dev.max((a[i * n + j] - a[j * n + i].conj()).norm());
                    }
                }
            }
            Storage::Banded(b) => {
                let w = b.lower.max(b.upper) as isize;
                for d in 0..=w {
                    let up = b.diagonal(d);
                    let lo = b.diagonal(-d);
                    let len = n - d as usize;
                    for k in 0..len {
                        let x = up.map_or(Complex::zero(), |u| u[k]);
                        let y = lo.map_or(Complex::zero(), |l| l[k]);
                        dev = dev.max((x - y.conj()).norm());
                    }
                }
            }
            Storage::Sparse(c) => {
                // Every nonzero on either side of the diagonal is visited once.
                for i in 0..n {
                    let (cols, vals) = c.row(i);
                    for (&j, &z) in cols.iter().zip(vals) {
                        dev = dev.max((z - c.get(j, i).conj()).norm());
                    }
                }
            }
        }
        dev
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Banded(_) | Storage::Sparse(_) => {
                let n = self.dim();
                let mut out = vec![Complex::zero(); n * n];
                self.for_each_nonzero(|i, j, z| out[i * n + j] = z);
                out
            }
        }
    }

    pub fn densified(&self) -> Self {
        Self { basis: self.basis.clone(), storage: Storage::Dense(self.to_dense()), hermitian: self.hermitian }
    }

    /// Visits every stored entry (for band storage, every in-band entry).
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, Complex<T>)) {
        let n = self.dim();
        match &self.storage {
            Storage::Dense(a) => {
                for i in 0..n {
                    for j in 0..n {
                        let z = a[i * n + j];
                        if !z.is_zero() {
                            f(i, j, z);
                        }
                    }
                }
            }
            Storage::Banded(b) => {
                for (k, diag) in b.diagonals.iter().enumerate() {
                    let d = k as isize - b.lower as isize;
                    for (p, &z) in diag.iter().enumerate() {
                        let (i, j) = if d >= 0 { (p, p + d as usize) } else { (p + d.unsigned_abs(), p) };
                        f(i, j, z);
                    }
                }
            }
            Storage::Sparse(c) => {
                for i in 0..n {
                    let (cols, vals) = c.row(i);
                    for (&j, &z) in cols.iter().zip(vals) {
                        f(i, j, z);
                    }
                }
            }
        }
    }

    /// `out = A x`.
    pub fn apply_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        match &self.storage {
            Storage::Dense(a) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &a[i * n..(i + 1) * n];
                    *o = row.iter().zip(x).fold(Complex::zero(), |acc, (r, v)| acc + r * v);
                }
            }
            Storage::Banded(b) => {
                out.iter_mut().for_each(|o| *o = Complex::zero());
                for (k, diag) in b.diagonals.iter().enumerate() {
                    let d = k as isize - b.lower as isize;
                    if d >= 0 {
                        let d = d as usize;
                        for (p, &z) in diag.iter().enumerate() {
                            out[p] += z * x[p + d];
                        }
                    } else {
                        let d = d.unsigned_abs();
                        for (p, &z) in diag.iter().enumerate() {
                            out[p + d] += z * x[p];
                        }
                    }
                }
            }
            Storage::Sparse(c) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (cols, vals) = c.row(i);
                    *o = cols.iter().zip(vals).fold(Complex::zero(), |acc, (&j, z)| acc + z * x[j]);
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
        if x.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        let mut out = vec![Complex::zero(); x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `A |ψ⟩` using whatever storage the operator has.
    pub fn matrix_free_apply(&self, state: &StateVector<T>) -> Result<StateVector<T>, LinalgError> {
        let out = self.apply(state.amplitudes())?;
        StateVector::new(self.basis.clone(), out)
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(a) => {
                let n = self.dim();
                let mut t = vec![Complex::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        t[j * n + i] = a[i * n + j].conj();
                    }
                }
                Storage::Dense(t)
            }
            Storage::Banded(b) => Storage::Banded(Band {
                lower: b.upper,
                upper: b.lower,
                diagonals: b.diagonals.iter().rev().map(|d| d.iter().map(|z| z.conj()).collect()).collect(),
            }),
            Storage::Sparse(_) => {
                let mut t = Vec::new();
                self.for_each_nonzero(|i, j, z| t.push((j, i, z.conj())));
                Storage::Sparse(Csr::from_triplets(self.dim(), t))
            }
        };
        Self { basis: self.basis.clone(), storage, hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: T) -> Self {
        let f = |z: &Complex<T>| z * factor;
        let storage = match &self.storage {
            Storage::Dense(a) => Storage::Dense(a.iter().map(f).collect()),
            Storage::Banded(b) => Storage::Banded(Band {
                lower: b.lower,
                upper: b.upper,
                diagonals: b.diagonals.iter().map(|d| d.iter().map(f).collect()).collect(),
            }),
            Storage::Sparse(c) => Storage::Sparse(Csr {
                row_start: c.row_start.clone(),
                cols: c.cols.clone(),
                vals: c.vals.iter().map(f).collect(),
            }),
        };
        Self { basis: self.basis.clone(), storage, hermitian: self.hermitian }
    }

    /// `self + factor · other`. Band + band stays banded, a dense operand
    /// makes the result dense, and any other mix is sparse.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Result<Self, LinalgError> {
        let hermitian = self.hermitian && other.hermitian;
        self.combine(Complex::one(), other, Complex::new(factor, T::zero()), hermitian)
    }

    /// `a · self + b · other` with complex weights. The result is flagged
    /// non-Hermitian unless the caller vouches for it. Storage rules as for
    /// [`Self::add_scaled`].
    pub fn linear_combination(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self, LinalgError> {
        self.combine(a, other, b, false)
    }

    fn combine(&self, wa: Complex<T>, other: &Self, wb: Complex<T>, hermitian: bool) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let n = self.dim();
        let storage = match (&self.storage, &other.storage) {
            (Storage::Banded(a), Storage::Banded(b)) => {
                let lower = a.lower.max(b.lower);
                let upper = a.upper.max(b.upper);
                let diagonals = (-(lower as isize)..=upper as isize)
                    .map(|d| {
                        let len = n - d.unsigned_abs();
                        (0..len)
                            .map(|p| {
                                let x = a.diagonal(d).map_or(Complex::zero(), |v| v[p]);
                                let y = b.diagonal(d).map_or(Complex::zero(), |v| v[p]);
                                x * wa + y * wb
                            })
                            .collect()
                    })
                    .collect();
                Storage::Banded(Band { lower, upper, diagonals })
            }
            (Storage::Dense(_), _) | (_, Storage::Dense(_)) => {
                let mut a: Vec<_> = self.to_dense().into_iter().map(|z| z * wa).collect();
                other.for_each_nonzero(|i, j, z| a[i * n + j] += z * wb);
                Storage::Dense(a)
            }
            _ => {
                let mut t = Vec::new();
                self.for_each_nonzero(|i, j, z| t.push((i, j, z * wa)));
                other.for_each_nonzero(|i, j, z| t.push((i, j, z * wb)));
                Storage::Sparse(Csr::from_triplets(n, t))
            }
        };
        Ok(Self { basis: self.basis.clone(), storage, hermitian })
    }
    /// Dense product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let n = self.dim();
        let b = other.to_dense();
        let mut out = vec![Complex::zero(); n * n];
        self.for_each_nonzero(|i, k, z| {
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, r) in dst.iter_mut().zip(row) {
                *d += z * r;
            }
        });
        Ok(Self { basis: self.basis.clone(), storage: Storage::Dense(out), hermitian: false })
    }

    /// `max |[A, B]_ij|`.
    pub fn commutator_norm(&self, other: &Self) -> Result<T, LinalgError> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        let diff = ab.add_scaled(&ba, -T::one())?;
        Ok(diff.max_abs())
    }

    /// Upper bound on the spectral norm: maximum absolute row sum.
    pub fn norm_bound(&self) -> T {
        let mut rows = vec![T::zero(); self.dim()];
        self.for_each_nonzero(|i, _, z| rows[i] += z.norm());
        rows.into_iter().fold(T::zero(), T::max)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self, LinalgError> {
        self.tensor_with_limit(other, DEFAULT_MAX_DIM)
    }

    /// Kronecker product, `self` index major. Band ⊗ identity-like
    /// structure is not exploited: the result is dense.
    pub fn tensor_with_limit(&self, other: &Self, max_dim: usize) -> Result<Self, LinalgError> {
        let (na, nb) = (self.dim(), other.dim());
        let dim = na.checked_mul(nb).unwrap_or(usize::MAX);
        if dim > max_dim {
            return Err(LinalgError::DimensionOverflow { dim, max: max_dim });
        }
        let basis = Arc::new(Basis::Product(self.basis.clone(), other.basis.clone()));
        let hermitian = self.hermitian && other.hermitian;
        if let (Storage::Banded(a), Storage::Banded(b)) = (&self.storage, &other.storage) {
            if a.lower == 0 && a.upper == 0 && b.lower == 0 && b.upper == 0 {
                let d: Vec<_> = a.diagonals[0]
                    .iter()
                    .flat_map(|&x| b.diagonals[0].iter().map(move |&y| x * y))
                    .collect();
                return Ok(Self { basis, storage: Storage::Banded(Band { lower: 0, upper: 0, diagonals: vec![d] }), hermitian });
            }
        }
        let mut out = vec![Complex::zero(); dim * dim];
        let bd = other.to_dense();
        self.for_each_nonzero(|i, j, x| {
            for k in 0..nb {
                for l in 0..nb {
                    let y = bd[k * nb + l];
                    if !y.is_zero() {
                        out[(i * nb + k) * dim + j * nb + l] = x * y;
                    }
                }
            }
        });
        Ok(Self { basis, storage: Storage::Dense(out), hermitian })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> LinearOperator<f64> {
        LinearOperator::real_diagonal(Arc::new(Basis::Indexed { dim: v.len() }), v.iter().copied()).unwrap()
    }

    #[test]
    fn hermitian_flag_is_checked() {
        let r = LinearOperator::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]], true);
        assert!(matches!(r, Err(LinalgError::NotHermitian { .. })));
        assert!(LinearOperator::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]], false).is_ok());
    }

    #[test]
    fn band_shape_is_validated() {
        let b = Arc::new(Basis::Indexed { dim: 3 });
        let bad = LinearOperator::<f64>::banded(b, 1, 0, vec![vec![Complex::zero(); 3]; 2], false);
        assert!(matches!(bad, Err(LinalgError::BadBand(_))));
    }

    #[test]
    fn kron_of_identities() {
        let i2 = LinearOperator::<f64>::identity(Arc::new(Basis::Indexed { dim: 2 }));
        let i3 = LinearOperator::<f64>::identity(Arc::new(Basis::Indexed { dim: 3 }));
        let i6 = i2.tensor(&i3).unwrap();
        assert_eq!(i6.to_dense(), LinearOperator::<f64>::identity(Arc::new(Basis::Indexed { dim: 6 })).to_dense());
    }

    #[test]
    fn kron_diag_with_identity() {
        let z = diag(&[1.0, -1.0]);
        let i2 = diag(&[1.0, 1.0]);
        let k = z.tensor(&i2).unwrap();
        let got: Vec<f64> = (0..4).map(|i| k.get(i, i).re).collect();
        assert_eq!(got, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn kron_overflow_rejected() {
        let a = diag(&[1.0; 16]);
        assert!(matches!(a.tensor_with_limit(&a, 200), Err(LinalgError::DimensionOverflow { dim: 256, max: 200 })));
    }

    #[test]
    fn adjoint_of_band_swaps_offsets() {
        let b = Arc::new(Basis::Indexed { dim: 3 });
        let op = LinearOperator::<f64>::banded(
            b,
            1,
            0,
            vec![vec![Complex::new(1.0, 1.0); 2], vec![Complex::zero(); 3]],
            false,
        )
        .unwrap();
        let adj = op.adjoint();
        assert_eq!(adj.get(0, 1), Complex::new(1.0, -1.0));
        assert_eq!(adj.get(1, 0), Complex::zero());
    }

    #[test]
    fn identity_apply_is_identity() {
        let v: Vec<Complex<f64>> = (0..5).map(|i| Complex::new(i as f64, -(i as f64))).collect();
        let id = LinearOperator::<f64>::identity(Arc::new(Basis::Indexed { dim: 5 }));
        assert_eq!(id.apply(&v).unwrap(), v);
    }

    #[test]
    fn sparse_agrees_with_dense() {
        let b = Arc::new(Basis::Indexed { dim: 4 });
        let z = |re: f64, im: f64| Complex::new(re, im);
        // Duplicate (0, 1) entries add up; the (2, 2) pair cancels and is dropped.
        let entries = vec![
            (0, 1, z(1.0, 1.0)),
            (0, 1, z(0.5, 0.0)),
            (1, 0, z(1.5, -1.0)),
            (2, 2, z(1.0, 0.0)),
            (2, 2, z(-1.0, 0.0)),
            (3, 0, z(0.0, 2.0)),
            (0, 3, z(0.0, -2.0)),
        ];
        let sp = LinearOperator::<f64>::sparse(b.clone(), entries, true).unwrap();
        let Storage::Sparse(c) = sp.storage() else { panic!("not sparse") };
        assert_eq!(c.nnz(), 4);
        let de = sp.densified();
        assert_eq!(sp.get(0, 1), z(1.5, 1.0));
        assert_eq!(sp.get(2, 2), Complex::zero());
        let x: Vec<Complex<f64>> = (0..4).map(|i| z(i as f64, 1.0 - i as f64)).collect();
        assert_eq!(sp.apply(&x).unwrap(), de.apply(&x).unwrap());
        assert_eq!(sp.adjoint().to_dense(), de.adjoint().to_dense());
        let d = diag(&[1.0, 2.0, 3.0, 4.0]);
        let mixed = sp.add_scaled(&d, 2.0).unwrap();
        assert!(matches!(mixed.storage(), Storage::Sparse(_)));
        assert_eq!(mixed.to_dense(), de.add_scaled(&d, 2.0).unwrap().to_dense());
        assert_eq!(sp.scale(3.0).to_dense(), de.scale(3.0).to_dense());
        assert_eq!(sp.max_abs(), de.max_abs());
        let bad = LinearOperator::<f64>::sparse(b.clone(), vec![(0, 1, z(1.0, 0.0))], true);
        assert!(matches!(bad, Err(LinalgError::NotHermitian { .. })));
        assert!(LinearOperator::<f64>::sparse(b, vec![(4, 0, z(1.0, 0.0))], false).is_err());
    }
}
