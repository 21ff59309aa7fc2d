//! Unitary evolution of a small symmetric system coupled to a bath of
//! qubits through its order parameter (pure dephasing).
//!
//! `Ĥ_tot = Ĥ_sys ⊗ 1 + 1 ⊗ Σ_k (ω_k/2)σ_z^k + g·m̂_x ⊗ Σ_k σ_z^k`, with the
//! combined symmetry `Σ = P_sys ⊗ Π_k σ_x^k`. `Σ` flips `m̂_x` and every bath
//! `σ_z^k`, so coupling terms are invariant; a bath frequency term is not,
//! which is why nonzero `ω_k` is rejected.
//!
//! The bath `σ_z^k` are conserved, so evolution is exact block by block: in
//! each bath configuration the system sees `Ĥ_sys + g·S·m̂_x` with
//! `S = Σ_k s_k`. Finite baths recohere (at `t = π/(2g)` for equal
//! couplings); these recurrences are reported, not suppressed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    expectation_normalized, hermitian_eigen, reduced_from_pure, Basis, Keep, LinalgError, DEFAULT_MAX_DIM,
};
use crate::models::ModelError;
use crate::{DensityMatrix, LinearOperator, StateVector, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("total dimension {dim} exceeds the budget {max}")]
    DimensionBudget { dim: usize, max: usize },
    #[error("no combined symmetry: {0}")]
    NoSymmetry(String),
    #[error("invalid composite: {0}")]
    Invalid(String),
}

/// The system half of the composite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// A pair of branches `|±⟩` with no dynamics of its own: `Ĥ_sys = 0`,
    /// `m̂_x = σ_x`, parity `σ_z`.
    TwoLevel,
    /// Open transverse-field Ising chain of 1 to 3 spins at control `p`.
    Spins { n: usize, p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSystem {
    pub system: SystemSpec,
    pub bath_qubits: usize,
    pub coupling: f64,
    /// One per bath qubit; empty means all zero.
    #[serde(default)]
    pub frequencies: Vec<f64>,
}

impl CompositeSystem {
    pub fn two_level(bath_qubits: usize, coupling: f64) -> Self {
        Self { system: SystemSpec::TwoLevel, bath_qubits, coupling, frequencies: Vec::new() }
    }

    fn sites(&self) -> usize {
        match self.system {
            SystemSpec::TwoLevel => 1,
            SystemSpec::Spins { n, .. } => n,
        }
    }

    pub fn system_dim(&self) -> usize {
        1 << self.sites()
    }

    pub fn dim(&self) -> usize {
        self.system_dim().saturating_mul(1usize.checked_shl(self.bath_qubits as u32).unwrap_or(usize::MAX))
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if let SystemSpec::Spins { n, p } = self.system {
            if !(1..=3).contains(&n) {
                return Err(BathError::Invalid(format!("system spins {n} outside 1..=3")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(BathError::Invalid(format!("p = {p} outside [0, 1]")));
            }
        }
        if self.bath_qubits == 0 || self.bath_qubits > 14 {
            return Err(BathError::Invalid(format!("bath_qubits = {} outside 1..=14", self.bath_qubits)));
        }
        if !self.coupling.is_finite() {
            return Err(BathError::Invalid("coupling must be finite".into()));
        }
        if !self.frequencies.is_empty() && self.frequencies.len() != self.bath_qubits {
            return Err(BathError::Invalid(format!(
                "{} frequencies given for {} bath qubits",
                self.frequencies.len(),
                self.bath_qubits
            )));
        }
        let dim = self.dim();
        if dim > DEFAULT_MAX_DIM {
            return Err(BathError::DimensionBudget { dim, max: DEFAULT_MAX_DIM });
        }
        Ok(())
    }
}

/// System-side operators and the combined symmetry, verified to commute
/// with the total Hamiltonian.
#[derive(Clone, Debug)]
pub struct CompositeOperators {
    pub spec: CompositeSystem,
    pub h_sys: LinearOperator,
    pub parity: LinearOperator,
    /// Pointer observable `m̂_x` on the system.
    pub pointer: LinearOperator,
    /// `‖[Ĥ_tot, Σ]‖` (max entry).
    pub commutator_norm: f64,
}

/// Dense total operators are only materialised up to this dimension.
pub const DENSE_TOTAL_LIMIT: usize = 1024;

impl CompositeOperators {
    fn bath_basis(&self) -> Arc<Basis> {
        Arc::new(Basis::Spins { sites: self.spec.bath_qubits })
    }

    fn bath_z_sum(&self) -> Result<LinearOperator, LinalgError> {
        let k = self.spec.bath_qubits;
        LinearOperator::real_diagonal(self.bath_basis(), (0..1usize << k).map(|b| k as f64 - 2.0 * b.count_ones() as f64))
    }

    fn bath_freq(&self) -> Result<LinearOperator, LinalgError> {
        let k = self.spec.bath_qubits;
        let w = &self.spec.frequencies;
        LinearOperator::real_diagonal(
            self.bath_basis(),
            (0..1usize << k).map(|b| {
                (0..w.len()).map(|q| if b >> (k - 1 - q) & 1 == 1 { -w[q] / 2.0 } else { w[q] / 2.0 }).sum()
            }),
        )
    }

    fn bath_flip(&self) -> Result<LinearOperator, LinalgError> {
        let n = 1usize << self.spec.bath_qubits;
        let mut d = vec![C64::default(); n * n];
        for b in 0..n {
            d[(n - 1 - b) * n + b] = C64::new(1.0, 0.0);
        }
        LinearOperator::dense(self.bath_basis(), d, true)
    }

    /// Dense `Ĥ_tot` (only for dimension ≤ [`DENSE_TOTAL_LIMIT`]).
    pub fn total_hamiltonian(&self) -> Result<LinearOperator, BathError> {
        self.check_dense()?;
        let one_b = LinearOperator::identity(self.bath_basis());
        let one_s = LinearOperator::identity(self.h_sys.basis().clone());
        let h = self
            .h_sys
            .tensor(&one_b)?
            .add_scaled(&one_s.tensor(&self.bath_freq()?)?, 1.0)?
            .add_scaled(&self.pointer.tensor(&self.bath_z_sum()?)?, self.spec.coupling)?;
        Ok(h.densified())
    }

    /// Dense `Σ = P_sys ⊗ Π_k σ_x^k`.
    pub fn total_symmetry(&self) -> Result<LinearOperator, BathError> {
        self.check_dense()?;
        Ok(self.parity.tensor(&self.bath_flip()?)?)
    }

    /// `m̂_x ⊗ 1`, the full-state order observable.
    pub fn total_pointer(&self) -> Result<LinearOperator, BathError> {
        self.check_dense()?;
        Ok(self.pointer.tensor(&LinearOperator::identity(self.bath_basis()))?)
    }

    fn check_dense(&self) -> Result<(), BathError> {
        let dim = self.spec.dim();
        if dim > DENSE_TOTAL_LIMIT {
            return Err(BathError::DimensionBudget { dim, max: DENSE_TOTAL_LIMIT });
        }
        Ok(())
    }
}

fn spin_ops(n: usize, p: f64) -> Result<(LinearOperator, LinearOperator, LinearOperator), LinalgError> {
    let dim = 1usize << n;
    let basis = Arc::new(Basis::Spins { sites: n });
    let bit = |s: usize| 1usize << (n - 1 - s);
    let mut h = vec![C64::default(); dim * dim];
    let mut mx = vec![C64::default(); dim * dim];
    for col in 0..dim {
        h[col * dim + col].re -= (1.0 - p) * (n as f64 - 2.0 * col.count_ones() as f64);
        for s in 0..n.saturating_sub(1) {
            let row = col ^ bit(s) ^ bit(s + 1);
            h[row * dim + col].re -= p;
        }
        for s in 0..n {
            mx[(col ^ bit(s)) * dim + col].re += 1.0 / n as f64;
        }
    }
    let parity = LinearOperator::real_diagonal(
        basis.clone(),
        (0..dim).map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }),
    )?;
    Ok((LinearOperator::dense(basis.clone(), h, true)?, parity, LinearOperator::dense(basis, mx, true)?))
}

/// Builds and checks the composite. Rejected when `Σ` fails to commute
/// with `Ĥ_tot`, which happens for any nonzero bath frequency.
pub fn build_composite(spec: &CompositeSystem) -> Result<CompositeOperators, BathError> {
    spec.validate()?;
    let (h_sys, parity, pointer) = match spec.system {
        SystemSpec::TwoLevel => spin_ops(1, 1.0)?,
        SystemSpec::Spins { n, p } => spin_ops(n, p)?,
    };
    let mut ops = CompositeOperators { spec: spec.clone(), h_sys, parity, pointer, commutator_norm: f64::NAN };

    // [A⊗B, P⊗X] vanishes when A commutes or anticommutes with P in step
    // with B and X. Check each factor, then the full matrix when small.
    let g = spec.coupling;
    let sys_comm = ops.h_sys.commutator_norm(&ops.parity)?;
    let anti = ops.pointer.matmul(&ops.parity)?.add_scaled(&ops.parity.matmul(&ops.pointer)?, 1.0)?.max_abs();
    let w_max = spec.frequencies.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    // A bath term 1⊗(ω/2)σ_z anticommutes with the flip: [·, Σ] = ω·P⊗σ_zX.
    let mut bound = sys_comm + g.abs() * spec.bath_qubits as f64 * anti + w_max;
    if spec.dim() <= DENSE_TOTAL_LIMIT {
        bound = ops.total_hamiltonian()?.commutator_norm(&ops.total_symmetry()?)?;
    }
    ops.commutator_norm = bound;
    if w_max != 0.0 {
        return Err(BathError::NoSymmetry(format!(
            "bath frequencies (max |ω| = {w_max}) do not commute with the bath flip"
        )));
    }
    if bound > 1e-12 {
        return Err(BathError::NoSymmetry(format!("‖[H_tot, Σ]‖ = {bound:e}")));
    }
    Ok(ops)
}

/// Parity-even starting state of the system: `|↑⟩ = (|+⟩+|−⟩)/√2` for the
/// branch pair, the even-sector ground state of `Ĥ_sys` for a chain.
fn symmetric_system_state(ops: &CompositeOperators) -> Result<Vec<C64>, BathError> {
    let d = ops.h_sys.dim();
    let even: Vec<usize> = (0..d).filter(|&i| ops.parity.get(i, i).re > 0.0).collect();
    let k = even.len();
    let mut sub = vec![C64::default(); k * k];
    for (a, &i) in even.iter().enumerate() {
        for (b, &j) in even.iter().enumerate() {
            sub[a * k + b] = ops.h_sys.get(i, j);
        }
    }
    let sub = LinearOperator::dense(Arc::new(Basis::Indexed { dim: k }), sub, true)?;
    let e = hermitian_eigen(&sub)?;
    let mut v = vec![C64::default(); d];
    for (a, &i) in even.iter().enumerate() {
        v[i] = e.vectors[0][a];
    }
    crate::linalg::eigen::fix_phase(&mut v);
    Ok(v)
}

/// Extreme pointer states `|+…+⟩`, `|−…−⟩` in the system's σ_z basis.
fn pointer_states(d: usize) -> (Vec<C64>, Vec<C64>) {
    let a = 1.0 / (d as f64).sqrt();
    let plus = vec![C64::new(a, 0.0); d];
    let minus = (0..d).map(|s: usize| C64::new(if s.count_ones() % 2 == 0 { a } else { -a }, 0.0)).collect();
    (plus, minus)
}

fn sandwich(rho: &DensityMatrix, u: &[C64], v: &[C64]) -> C64 {
    let d = rho.dim();
    let mut acc = C64::default();
    for i in 0..d {
        for j in 0..d {
            acc += u[i].conj() * rho.get(i, j) * v[j];
        }
    }
    acc
}

/// Exact propagator for the composite.
struct BlockPropagator {
    d_sys: usize,
    k: usize,
    /// Per distinct `S`: eigenvalues, eigenvectors of `Ĥ_sys + gS·m̂_x`, and
    /// the initial system vector in that eigenbasis.
    blocks: Vec<(Vec<f64>, Vec<Vec<C64>>, Vec<C64>)>,
}

impl BlockPropagator {
    fn new(ops: &CompositeOperators, psi0_sys: Vec<C64>) -> Result<Self, BathError> {
        let k = ops.spec.bath_qubits;
        let mut blocks = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let s = k as f64 - 2.0 * j as f64;
            let h = ops.h_sys.add_scaled(&ops.pointer, ops.spec.coupling * s)?;
            let e = hermitian_eigen(&h)?;
            let coeffs = e.vectors.iter().map(|v| v.iter().zip(&psi0_sys).map(|(a, b)| a.conj() * b).sum()).collect();
            blocks.push((e.values, e.vectors, coeffs));
        }
        Ok(Self { d_sys: ops.h_sys.dim(), k, blocks })
    }

    /// Full state at time `t`, system index major.
    fn state(&self, t: f64) -> Vec<C64> {
        let nb = 1usize << self.k;
        let amp = 1.0 / (nb as f64).sqrt();
        let per_block: Vec<Vec<C64>> = self
            .blocks
            .iter()
            .map(|(vals, vecs, coeffs)| {
                let mut out = vec![C64::default(); self.d_sys];
                for ((&l, v), &c) in vals.iter().zip(vecs).zip(coeffs) {
                    let w = c * C64::from_polar(amp, -l * t);
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += w * x;
                    }
                }
                out
            })
            .collect();
        let mut psi = vec![C64::default(); self.d_sys * nb];
        for b in 0..nb {
            let sys = &per_block[b.count_ones() as usize];
            for i in 0..self.d_sys {
                psi[i * nb + b] = sys[i];
            }
        }
        psi
    }
}

#[derive(Clone, Debug)]
pub struct DecoherenceSeries {
    pub times: Vec<f64>,
    pub reduced: Vec<DensityMatrix>,
    pub purity_reduced: Vec<f64>,
    /// `|ρ₊₋|/√(ρ₊₊ρ₋₋)` between the extreme pointer states.
    pub coherence: Vec<f64>,
    pub population_plus: Vec<f64>,
    pub population_minus: Vec<f64>,
    /// Full-state `⟨m̂_x ⊗ 1⟩`.
    pub symmetry_expectation: Vec<f64>,
    /// `(⟨ψ|ψ⟩)²`, the purity of the full pure state.
    pub purity_full: Vec<f64>,
}

/// `|Π_k cos(2g t)|`, the dephasing factor for equal couplings.
pub fn coherence_closed_form(coupling: f64, bath_qubits: usize, t: f64) -> f64 {
    (2.0 * coupling * t).cos().abs().powi(bath_qubits as i32)
}

/// Evolves `(symmetric system state) ⊗ |→…→⟩` and samples `samples + 1`
/// equally spaced times on `[0, t_final]`.
pub fn decohere_run(spec: &CompositeSystem, t_final: f64, samples: usize) -> Result<DecoherenceSeries, BathError> {
    let ops = build_composite(spec)?;
    if !(t_final >= 0.0) || samples == 0 {
        return Err(BathError::Invalid("need t_final ≥ 0 and at least one sample".into()));
    }
    let psi0 = symmetric_system_state(&ops)?;
    let prop = BlockPropagator::new(&ops, psi0)?;
    let d = ops.h_sys.dim();
    let nb = 1usize << spec.bath_qubits;
    let (plus, minus) = pointer_states(d);
    let full_basis = Arc::new(Basis::Product(ops.h_sys.basis().clone(), ops.bath_basis()));

    let mut out = DecoherenceSeries {
        times: Vec::new(),
        reduced: Vec::new(),
        purity_reduced: Vec::new(),
        coherence: Vec::new(),
        population_plus: Vec::new(),
        population_minus: Vec::new(),
        symmetry_expectation: Vec::new(),
        purity_full: Vec::new(),
    };
    for s in 0..=samples {
        let t = t_final * s as f64 / samples as f64;
        let psi = prop.state(t);
        let state = StateVector::new(full_basis.clone(), psi)?;
        let rho = reduced_from_pure(&state, (d, nb), Keep::System)?;
        let pp = sandwich(&rho, &plus, &plus).re;
        let pm = sandwich(&rho, &minus, &minus).re;
        let c = sandwich(&rho, &plus, &minus).norm() / (pp * pm).sqrt();
        // ⟨m̂_x ⊗ 1⟩ = tr(ρ_sys m̂_x).
        let sym = rho.expectation(&ops.pointer)?.re;
        out.times.push(t);
        out.purity_reduced.push(rho.purity());
        out.coherence.push(c);
        out.population_plus.push(pp);
        out.population_minus.push(pm);
        out.symmetry_expectation.push(sym);
        out.purity_full.push(state.norm_sqr().powi(2));
        out.reduced.push(rho);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatLionReport {
    pub time: f64,
    pub purity_full: f64,
    pub purity_system: f64,
    pub purity_bath: f64,
    pub entropy_system: f64,
    pub symmetry_before: f64,
    pub symmetry_after: f64,
}

/// One system branch pair and one bath qubit ("cat" and "lion"): at
/// `t = π/(4g)` the two are maximally entangled while the whole stays pure.
pub fn cat_lion_demo(spec: &CompositeSystem) -> Result<CatLionReport, BathError> {
    if spec.bath_qubits != 1 {
        return Err(BathError::Invalid("the demonstration uses exactly one bath qubit".into()));
    }
    if spec.coupling == 0.0 {
        return Err(BathError::Invalid("the demonstration needs g ≠ 0".into()));
    }
    let ops = build_composite(spec)?;
    let psi0 = symmetric_system_state(&ops)?;
    let prop = BlockPropagator::new(&ops, psi0)?;
    let t = std::f64::consts::PI / (4.0 * spec.coupling.abs());
    let sigma_obs = ops.total_pointer()?;
    let basis = sigma_obs.basis().clone();
    let before = StateVector::new(basis.clone(), prop.state(0.0))?;
    let after = StateVector::new(basis, prop.state(t))?;
    let d = ops.h_sys.dim();
    let full = DensityMatrix::from_pure(&after)?;
    let rho_s = reduced_from_pure(&after, (d, 2), Keep::System)?;
    let rho_b = reduced_from_pure(&after, (d, 2), Keep::Bath)?;
    Ok(CatLionReport {
        time: t,
        purity_full: full.purity(),
        purity_system: rho_s.purity(),
        purity_bath: rho_b.purity(),
        entropy_system: rho_s.von_neumann_entropy()?,
        symmetry_before: expectation_normalized(&before, &sigma_obs)?.re,
        symmetry_after: expectation_normalized(&after, &sigma_obs)?.re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn frequencies_break_symmetry() {
        let mut s = CompositeSystem::two_level(2, 0.1);
        s.frequencies = vec![0.3, 0.0];
        assert!(matches!(build_composite(&s), Err(BathError::NoSymmetry(_))));
        s.frequencies = vec![0.0, 0.0];
        assert!(build_composite(&s).unwrap().commutator_norm < 1e-12);
    }

    #[test]
    fn decoupled_stays_pure() {
        let r = decohere_run(&CompositeSystem::two_level(3, 0.0), 10.0, 10).unwrap();
        assert!(r.purity_reduced.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dephasing_closed_form() {
        let g = 0.1;
        let spec = CompositeSystem::two_level(8, g);
        let t_end = PI / (2.0 * g);
        let r = decohere_run(&spec, t_end, 40).unwrap();
        for (i, &t) in r.times.iter().enumerate() {
            assert!((r.coherence[i] - coherence_closed_form(g, 8, t)).abs() < 1e-8);
            assert!((r.population_plus[i] - 0.5).abs() < 1e-12);
            assert!(r.symmetry_expectation[i].abs() < 1e-12);
            assert!((r.purity_full[i] - 1.0).abs() < 1e-10);
        }
        assert!(r.coherence[20] < 1e-12);
        assert!((r.purity_reduced[20] - 0.5).abs() < 1e-10);
        assert!((r.purity_reduced[40] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn block_matches_dense() {
        let spec = CompositeSystem { system: SystemSpec::Spins { n: 2, p: 1.0 }, bath_qubits: 3, coupling: 0.2, frequencies: vec![] };
        let ops = build_composite(&spec).unwrap();
        let h = ops.total_hamiltonian().unwrap();
        let e = hermitian_eigen(&h).unwrap();
        let prop = BlockPropagator::new(&ops, symmetric_system_state(&ops).unwrap()).unwrap();
        let psi0 = prop.state(0.0);
        let t = 1.7;
        let mut dense = vec![C64::default(); psi0.len()];
        for (l, v) in e.values.iter().zip(&e.vectors) {
            let c: C64 = v.iter().zip(&psi0).map(|(a, b)| a.conj() * b).sum::<C64>() * C64::from_polar(1.0, -l * t);
            for (d, x) in dense.iter_mut().zip(v) {
                *d += c * x;
            }
        }
        let blk = prop.state(t);
        for (a, b) in dense.iter().zip(&blk) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cat_and_lion() {
        let r = cat_lion_demo(&CompositeSystem::two_level(1, 0.3)).unwrap();
        assert!((r.purity_full - 1.0).abs() < 1e-12);
        assert!((r.purity_system - 0.5).abs() < 1e-12);
        assert!((r.purity_bath - 0.5).abs() < 1e-12);
        assert!((r.entropy_system - 2f64.ln()).abs() < 1e-8);
        assert!(r.symmetry_before.abs() < 1e-14 && r.symmetry_after.abs() < 1e-12);
    }
}
