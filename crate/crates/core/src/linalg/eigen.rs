//! Hermitian eigensolvers.
//!
//! Below [`DENSE_LIMIT`] the full spectrum is computed: Householder
//! reduction to a Hermitian tridiagonal, a diagonal phase gauge that makes the
//! tridiagonal real, then implicit QL. Above it the lowest eigenpair is found
//! by restarted Lanczos with full reorthogonalisation, touching the operator
//! only through [`LinearOperator::apply_into`].

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::{inner, norm_sqr};
use super::{LinalgError, LinearOperator, StateVector, Storage};
use crate::scalar::Real;

/// Dimensions strictly below this use the dense solver.
pub const DENSE_LIMIT: usize = 512;

const QL_MAX_SWEEPS: usize = 60;

/// Eigenvalues ascending, eigenvectors as columns (`vectors[j]` is the
/// eigenvector of `values[j]`).
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Relative residual target, `‖Hv − λv‖ / ‖H‖`.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 160, max_restarts: 400, tolerance: 1e-10, seed: 0x5eed }
    }
}

/// Real symmetric tridiagonal eigenproblem by implicit QL.
///
/// `diag` is overwritten with eigenvalues (unsorted); `off[i]` couples `i` and
/// `i + 1` and is destroyed. `z` is an `n × n` row-major matrix that is
/// right-multiplied by the accumulated rotations.
fn tridiagonal_ql<T: Real>(diag: &mut [T], off: &mut [T], z: &mut [T]) -> Result<(), LinalgError> {
    let n = diag.len();
    if n < 2 {
        return Ok(());
    }
    let two = T::lit(2.0);
    off[n - 1] = T::zero();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_MAX_SWEEPS {
                return Err(LinalgError::NoConvergence {
                    iterations: sweeps,
                    residual: off[l].abs().to_f64().unwrap_or(f64::NAN),
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (two * off[l]);
            let mut r = g.hypot(T::one());
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == T::zero() {
                    diag[i + 1] -= p;
                    off[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + two * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[k * n + i + 1];
                    let zi = z[k * n + i];
                    z[k * n + i + 1] = s * zi + c * zf;
                    z[k * n + i] = c * zi - s * zf;
                }
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = T::zero();
        }
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian operator (dense path).
pub fn hermitian_eigen<T: Real>(op: &LinearOperator<T>) -> Result<HermitianEigen<T>, LinalgError> {
    if !op.is_hermitian() {
        return Err(LinalgError::RequiresHermitian);
    }
    let n = op.dim();
    let mut a = op.to_dense();
    let two = T::lit(2.0);

    // q accumulates the Householder reflections, row-major.
    let mut q = vec![Complex::<T>::zero(); n * n];
    for i in 0..n {
        q[i * n + i] = Complex::one();
    }

    let mut v = vec![Complex::<T>::zero(); n];
    let mut w = vec![Complex::<T>::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let xnorm = (lo..n).map(|i| a[i * n + k].norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = a[lo * n + k];
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { Complex::one() };
        let alpha = -phase * xnorm;
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vnorm = (lo..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for vi in v[lo..n].iter_mut() {
            *vi = *vi / vnorm;
        }
        // p = A v on the trailing block, K = v† p, w = p - K v.
        for i in lo..n {
            w[i] = (lo..n).fold(Complex::zero(), |acc, j| acc + a[i * n + j] * v[j]);
        }
        let kk = (lo..n).fold(Complex::<T>::zero(), |acc, i| acc + v[i].conj() * w[i]).re;
        for i in lo..n {
            w[i] -= v[i] * kk;
        }
        for i in lo..n {
            for j in lo..n {
                a[i * n + j] -= (v[i] * w[j].conj() + w[i] * v[j].conj()) * two;
            }
        }
        a[lo * n + k] = alpha;
        a[k * n + lo] = alpha.conj();
        for i in lo + 1..n {
            a[i * n + k] = Complex::zero();
            a[k * n + i] = Complex::zero();
        }
        // Q <- Q (I - 2 v v†)
        for r in 0..n {
            let qv = (lo..n).fold(Complex::<T>::zero(), |acc, j| acc + q[r * n + j] * v[j]);
            for j in lo..n {
                q[r * n + j] -= qv * v[j].conj() * two;
            }
        }
    }

    // Gauge the complex tridiagonal to a real one: T_c = D T_r D†.
    let mut gauge = vec![Complex::<T>::one(); n];
    let mut diag: Vec<T> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut off = vec![T::zero(); n];
    for k in 0..n.saturating_sub(1) {
        let e = a[(k + 1) * n + k];
        let m = e.norm();
        off[k] = m;
        gauge[k + 1] = if m > T::zero() { gauge[k] * (e / m) } else { gauge[k] };
    }

    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tridiagonal_ql(&mut diag, &mut off, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));

    // Eigenvectors: (Q D) Z.
    let mut qd = q;
    for r in 0..n {
        for c in 0..n {
            qd[r * n + c] = qd[r * n + c] * gauge[c];
        }
    }
    let values = order.iter().map(|&j| diag[j]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            (0..n)
                .map(|r| (0..n).fold(Complex::zero(), |acc, c| acc + qd[r * n + c] * z[c * n + j]))
                .collect()
        })
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Lowest `k` eigenpairs. Always dense; `k` may not exceed the dimension.
pub fn lowest_eigenpairs<T: Real>(op: &LinearOperator<T>, k: usize) -> Result<HermitianEigen<T>, LinalgError> {
    if k > op.dim() {
        return Err(LinalgError::TooManyEigenpairs { requested: k, dim: op.dim() });
    }
    let mut e = hermitian_eigen(op)?;
    e.values.truncate(k);
    e.vectors.truncate(k);
    Ok(e)
}

pub fn residual_norm<T: Real>(op: &LinearOperator<T>, value: T, vector: &[Complex<T>]) -> T {
    let mut hv = vec![Complex::zero(); vector.len()];
    op.apply_into(vector, &mut hv);
    hv.iter().zip(vector).map(|(h, x)| (h - x * value).norm_sqr()).sum::<T>().sqrt()
}

/// Lowest eigenpair by restarted Lanczos.
pub fn lanczos_lowest<T: Real>(
    op: &LinearOperator<T>,
    opts: &LanczosOptions,
) -> Result<(T, Vec<Complex<T>>), LinalgError> {
    if !op.is_hermitian() {
        return Err(LinalgError::RequiresHermitian);
    }
    let n = op.dim();
    let scale = op.norm_bound().max(T::min_positive_value());
    let tol = T::lit(opts.tolerance) * scale;
    let kmax = opts.krylov_dim.min(n).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Complex<T>> = (0..n)
        .map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    let mut best = (T::infinity(), start.clone());
    let mut last_residual = T::infinity();

    for _restart in 0..opts.max_restarts {
        let nrm = norm_sqr(&start).sqrt();
        for x in start.iter_mut() {
            *x = *x / nrm;
        }
        let mut basis: Vec<Vec<Complex<T>>> = vec![start.clone()];
        let mut alphas: Vec<T> = Vec::with_capacity(kmax);
        let mut betas: Vec<T> = Vec::with_capacity(kmax);
        let mut w = vec![Complex::zero(); n];
        for j in 0..kmax {
            op.apply_into(&basis[j], &mut w);
            let a = inner(&basis[j], &w).re;
            alphas.push(a);
            // Full reorthogonalisation, twice for stability.
            for _ in 0..2 {
                for b in &basis {
                    let proj = inner(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= bi * proj;
                    }
                }
            }
            let beta = norm_sqr(&w).sqrt();
            if j + 1 == kmax || beta <= T::epsilon() * scale {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let m = alphas.len();
        let mut d = alphas.clone();
        let mut e = vec![T::zero(); m];
        e[..m - 1].copy_from_slice(&betas[..m - 1]);
        let mut z = vec![T::zero(); m * m];
        for i in 0..m {
            z[i * m + i] = T::one();
        }
        tridiagonal_ql(&mut d, &mut e, &mut z)?;
        let lo = (0..m).fold(0, |b, i| if d[i] < d[b] { i } else { b });
        let theta = d[lo];
        let mut ritz = vec![Complex::<T>::zero(); n];
        for (i, b) in basis.iter().enumerate() {
            let coef = z[i * m + lo];
            for (r, bi) in ritz.iter_mut().zip(b) {
                *r += bi * coef;
            }
        }
        let rn = norm_sqr(&ritz).sqrt();
        for r in ritz.iter_mut() {
            *r = *r / rn;
        }
        let res = residual_norm(op, theta, &ritz);
        last_residual = res;
        if theta < best.0 || res <= tol {
            best = (theta, ritz.clone());
        }
        if res <= tol {
            return Ok((theta, ritz));
        }
        start = ritz;
    }
    Err(LinalgError::NoConvergence {
        iterations: opts.max_restarts * kmax,
        residual: (last_residual / scale).to_f64().unwrap_or(f64::NAN),
    })
}

/// Lowest eigenpair of a banded Hermitian operator with bandwidth ≤ 1, by
/// Sturm bisection plus inverse iteration. `None` for any other storage.
/// Lanczos stalls on these when the low gap is tiny against `‖H‖`.
pub fn tridiagonal_lowest<T: Real>(op: &LinearOperator<T>) -> Option<(T, Vec<Complex<T>>)> {
    let band = match op.storage() {
        Storage::Banded(b) if op.is_hermitian() && b.lower() <= 1 && b.upper() <= 1 => b,
        _ => return None,
    };
    let n = op.dim();
    let a: Vec<T> = band.diagonal(0)?.iter().map(|z| z.re).collect();
    let sub: Vec<Complex<T>> = match band.diagonal(-1) {
        Some(d) => d.to_vec(),
        None => band.diagonal(1).map_or(vec![Complex::zero(); n.saturating_sub(1)], |d| d.iter().map(|z| z.conj()).collect()),
    };
    let b: Vec<T> = sub.iter().map(|z| z.norm()).collect();
    // H = D T D† with T real: d_{i+1} = d_i · l_i/|l_i|.
    let mut gauge = vec![Complex::<T>::one(); n];
    for i in 0..n.saturating_sub(1) {
        gauge[i + 1] = if b[i] > T::zero() { gauge[i] * sub[i] / b[i] } else { gauge[i] };
    }

    // Gershgorin bracket for the lowest root.
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { b[i - 1] } else { T::zero() } + if i + 1 < n { b[i] } else { T::zero() };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let tiny = T::min_positive_value().sqrt();
    let below = |x: T| {
        let mut count = 0usize;
        let mut q = T::one();
        for i in 0..n {
            q = a[i] - x - if i > 0 { b[i - 1] * b[i - 1] / q } else { T::zero() };
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    };
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = (lo + hi) / two;

    // Inverse iteration; the shift sits a hair under λ so the solve is regular.
    let scale = lo.abs().max(hi.abs()).max(b.iter().fold(T::zero(), |m, &x| m.max(x))).max(T::min_positive_value());
    let shift = lambda - T::epsilon() * scale * T::lit(16.0);
    let mut x = vec![T::one(); n];
    for _ in 0..4 {
        x = tridiagonal_solve(&a, &b, shift, &x);
        let nrm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if !(nrm > T::zero()) || !nrm.is_finite() {
            return None;
        }
        for v in x.iter_mut() {
            *v = *v / nrm;
        }
    }
    let vec = x.iter().zip(&gauge).map(|(&v, g)| g * v).collect();
    Some((lambda, vec))
}

/// Solves `(T − s)y = r` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting.
fn tridiagonal_solve<T: Real>(a: &[T], b: &[T], s: T, r: &[T]) -> Vec<T> {
    let n = a.len();
    let tiny = T::min_positive_value().sqrt();
    // Row i after elimination: u0[i] y_i + u1[i] y_{i+1} + u2[i] y_{i+2} = rhs[i].
    let mut diag: Vec<T> = a.iter().map(|&x| x - s).collect();
    let mut up: Vec<T> = b.to_vec();
    up.push(T::zero());
    let mut low: Vec<T> = b.to_vec();
    let mut u0 = vec![T::zero(); n];
    let mut u1 = vec![T::zero(); n];
    let mut u2 = vec![T::zero(); n];
    let mut rhs = r.to_vec();
    for i in 0..n {
        if i + 1 < n && low[i].abs() > diag[i].abs() {
            // Swap rows i and i+1.
            let (d0, e0, f0) = (diag[i], up[i], T::zero());
            let (d1, e1, f1) = (low[i], diag[i + 1], up[i + 1]);
            rhs.swap(i, i + 1);
            u0[i] = d1;
            u1[i] = e1;
            u2[i] = f1;
            let m = d0 / d1;
            diag[i + 1] = e0 - m * e1;
            up[i + 1] = f0 - m * f1;
            rhs[i + 1] = rhs[i + 1] - m * rhs[i];
        } else {
            let d = if diag[i] == T::zero() { tiny } else { diag[i] };
            u0[i] = d;
            u1[i] = up[i];
            u2[i] = T::zero();
            if i + 1 < n {
                let m = low[i] / d;
                diag[i + 1] = diag[i + 1] - m * up[i];
                rhs[i + 1] = rhs[i + 1] - m * rhs[i];
            }
        }
        if i + 1 < n {
            low[i] = T::zero();
        }
    }
    let mut y = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        if i + 1 < n {
            v = v - u1[i] * y[i + 1];
        }
        if i + 2 < n {
            v = v - u2[i] * y[i + 2];
        }
        let d = if u0[i] == T::zero() { tiny } else { u0[i] };
        y[i] = v / d;
    }
    y
}

/// Ground state `(E₀, |gs⟩)` of a Hermitian operator. Dense below
/// [`DENSE_LIMIT`], Lanczos above. The returned state is normalised and its
/// largest-modulus amplitude is real positive.
pub fn ground_state<T: Real>(op: &LinearOperator<T>) -> Result<(T, StateVector<T>), LinalgError> {
    if !op.is_hermitian() {
        return Err(LinalgError::RequiresHermitian);
    }
    let (value, mut vec) = if op.dim() < DENSE_LIMIT {
        let mut e = hermitian_eigen(op)?;
        (e.values[0], e.vectors.swap_remove(0))
    } else if let Some(pair) = tridiagonal_lowest(op) {
        pair
    } else {
        lanczos_lowest(op, &LanczosOptions::default())?
    };
    fix_phase(&mut vec);
    let scale = op.norm_bound().max(T::min_positive_value());
    let res = residual_norm(op, value, &vec);
    if res > T::lit(1e-8) * scale {
        return Err(LinalgError::NoConvergence {
            iterations: 0,
            residual: (res / scale).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((value, StateVector::new(op.basis().clone(), vec)?))
}

/// Rotate the global phase so the largest-modulus amplitude is real positive
/// (first such index on ties).
pub fn fix_phase<T: Real>(v: &mut [Complex<T>]) {
    let mut best = 0;
    let mut best_mod = T::zero();
    for (i, x) in v.iter().enumerate() {
        // Ties within rounding go to the earliest index.
        if x.norm() > best_mod * (T::one() + T::lit(1e-9)) {
            best = i;
            best_mod = x.norm();
        }
    }
    if best_mod > T::zero() {
        let ph = v[best].conj() / best_mod;
        for x in v.iter_mut() {
            *x = *x * ph;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Basis;
    use std::sync::Arc;

    #[test]
    fn diag_ground_state() {
        let op = LinearOperator::<f64>::from_real_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]], true)
            .unwrap();
        let (e, v) = ground_state(&op).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
        assert!((v.amplitudes()[1].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_well() {
        let op = LinearOperator::<f64>::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]], true).unwrap();
        let (e, v) = ground_state(&op).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        for a in v.amplitudes() {
            assert!((a.re - s).abs() < 1e-14 && a.im.abs() < 1e-14);
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 60;
        let b = Arc::new(Basis::Indexed { dim: n });
        let diag: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(((i as f64) - 30.0).powi(2) / 50.0, 0.0)).collect();
        let off: Vec<Complex<f64>> = (0..n - 1).map(|i| Complex::from_polar(-0.3, 0.4 + i as f64 * 0.01)).collect();
        let up: Vec<Complex<f64>> = off.iter().map(|z| z.conj()).collect();
        let op = LinearOperator::banded(b, 1, 1, vec![off, diag, up], true).unwrap();
        let (e, mut v) = tridiagonal_lowest(&op).unwrap();
        let dense = hermitian_eigen(&op.densified()).unwrap();
        assert!((e - dense.values[0]).abs() < 1e-12, "{e} {}", dense.values[0]);
        assert!(residual_norm(&op, e, &v) < 1e-12);
        let mut w = dense.vectors[0].clone();
        fix_phase(&mut v);
        fix_phase(&mut w);
        let diff: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn non_hermitian_rejected() {
        let op = LinearOperator::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]], false).unwrap();
        assert_eq!(ground_state(&op).unwrap_err(), LinalgError::RequiresHermitian);
    }

    #[test]
    fn complex_hermitian_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let b = Arc::new(Basis::Indexed { dim: 2 });
        let data: Vec<Complex<f64>> = vec![
            Complex::new(2.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(0.0, -1.0),
            Complex::new(2.0, 0.0),
        ];
        let op = LinearOperator::dense(b, data, true).unwrap();
        let e = hermitian_eigen(&op).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        for (val, vec) in e.values.iter().zip(&e.vectors) {
            assert!(residual_norm(&op, *val, vec) < 1e-13);
        }
    }

    #[test]
    fn too_many_pairs() {
        let op = LinearOperator::<f64>::identity(Arc::new(Basis::Indexed { dim: 3 }));
        assert!(matches!(lowest_eigenpairs(&op, 4), Err(LinalgError::TooManyEigenpairs { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let op = LinearOperator::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]], true).unwrap();
        let e = hermitian_eigen(&op).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-6);
    }
}
