//! Time evolution under `d|ψ⟩/dt = −iĤ|ψ⟩ + εB̂|ψ⟩`, with the state
//! renormalised after every accepted step and expectation values taken on
//! the normalised state.
//!
//! The sign in front of `εB̂` makes components with large `⟨B̂⟩` grow, so an
//! orientation favoured by `B̂` is the one selected. Written as
//! `i d|ψ⟩/dt = (Ĥ − iεK̂)|ψ⟩` this is `K̂ = −B̂`, i.e. `K̂` is the energy
//! term `−N cos(θ̂ − θ₀)` of an equilibrium field.

mod collapse;
mod quench;
mod reorient;

use std::cell::RefCell;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{expectation_raw, Basis, LinalgError};
use crate::models::ModelError;
use crate::ode::{DormandPrince, HookAction, OdeError, StepControl};
use crate::{LinearOperator, StateVector, C64};

pub use crate::fit::{fit_timescales, TimescaleFit, TimescalePoint};
pub use collapse::{collapse_ensemble, collapse_run, collapse_time, CollapseOptions, CollapseOutcome, EnsembleSummary};
pub use quench::{quench_sweep, QuenchSpec, RampSchedule};
pub use reorient::{reorientation_run, reorientation_time, ReorientOptions, ReorientOutcome};

/// Local error tolerance per unit time used unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Largest admissible final-state difference between a run and its
/// tightened-tolerance twin.
pub const VERIFY_LIMIT: f64 = 1e-6;
/// Largest admissible weight on the outermost rotor states.
pub const EDGE_LIMIT: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("state norm underflowed (|ψ|² = {norm_sqr:e}) at t = {t}; step too large")]
    NormUnderflow { t: f64, norm_sqr: f64 },
    #[error("breaking field must be Hermitian")]
    NonHermitianField,
    #[error("Hamiltonian must be Hermitian")]
    NonHermitianHamiltonian,
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("threshold {gamma} never reached by t = {t_end} (last value {last})")]
    ThresholdNotReached { gamma: f64, t_end: f64, last: f64 },
    #[error("orientation never came within {tolerance} rad of the field by t = {t_end}")]
    NotReoriented { tolerance: f64, t_end: f64 },
    #[error("packet reached the cutoff (edge weight {edge_weight:e} at t = {t})")]
    PacketLeftWindow { t: f64, edge_weight: f64 },
    #[error("step-halving check failed: final states differ by {0:e}")]
    VerificationFailed(f64),
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
}

/// Right-hand side of a (possibly time-dependent) evolution equation.
pub trait Drive {
    fn basis(&self) -> &Arc<Basis>;
    fn dim(&self) -> usize {
        self.basis().dim()
    }
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
    /// `⟨Ĥ(t)⟩` on the normalised state.
    fn energy(&self, t: f64, y: &[C64]) -> f64;
}

/// A static generator `−iĤ + εB̂`.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    hamiltonian: LinearOperator,
    epsilon: f64,
    breaking_field: LinearOperator,
    compiled: LinearOperator,
}

impl GeneratorSpec {
    pub fn new(hamiltonian: LinearOperator, epsilon: f64, breaking_field: LinearOperator) -> Result<Self, DynamicsError> {
        if !hamiltonian.is_hermitian() {
            return Err(DynamicsError::NonHermitianHamiltonian);
        }
        if !breaking_field.is_hermitian() {
            return Err(DynamicsError::NonHermitianField);
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(DynamicsError::BadInput(format!("epsilon = {epsilon} must be ≥ 0")));
        }
        if hamiltonian.dim() != breaking_field.dim() {
            return Err(LinalgError::DimensionMismatch { expected: hamiltonian.dim(), actual: breaking_field.dim() }.into());
        }
        // At ε = 0 the field enters with weight exactly zero, so the
        // compiled generator is exactly −iĤ.
        let compiled =
            hamiltonian.linear_combination(C64::new(0.0, -1.0), &breaking_field, C64::new(epsilon, 0.0))?;
        Ok(Self { hamiltonian, epsilon, breaking_field, compiled })
    }

    pub fn unitary(hamiltonian: LinearOperator) -> Result<Self, DynamicsError> {
        let zero = hamiltonian.scale(0.0);
        Self::new(hamiltonian, 0.0, zero)
    }

    pub fn hamiltonian(&self) -> &LinearOperator {
        &self.hamiltonian
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn breaking_field(&self) -> &LinearOperator {
        &self.breaking_field
    }
}

impl Drive for GeneratorSpec {
    fn basis(&self) -> &Arc<Basis> {
        self.hamiltonian.basis()
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.compiled.apply_into(y, dy);
    }

    fn energy(&self, _t: f64, y: &[C64]) -> f64 {
        expectation_raw(y, &self.hamiltonian, true).map_or(f64::NAN, |e| e.re)
    }
}

/// Samples of an integration run. All arrays have the same length.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub op_modulus: Vec<f64>,
    pub op_phase: Vec<f64>,
    /// Real part of the order parameter; carries the sign for Hermitian
    /// order parameters.
    pub op_real: Vec<f64>,
    pub energy: Vec<f64>,
    /// Accumulated `ln` of the norm removed by renormalisation.
    pub log_norm: Vec<f64>,
    /// Last accepted step before each sample (0 at the first).
    pub step_sizes: Vec<f64>,
    /// Accepted integrator steps in total.
    pub steps: usize,
    /// Distance to the tightened-tolerance twin run, when checked.
    pub verification_error: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, s: &Sample) {
        self.times.push(s.t);
        self.op_modulus.push(s.op.norm());
        self.op_phase.push(s.op.arg());
        self.op_real.push(s.op.re);
        self.energy.push(s.energy);
        self.log_norm.push(s.log_norm);
        self.step_sizes.push(s.step);
    }

    pub fn final_op_modulus(&self) -> f64 {
        *self.op_modulus.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample {
    pub t: f64,
    pub op: C64,
    pub energy: f64,
    pub log_norm: f64,
    pub step: f64,
}

/// Integration state shared by every experiment driver.
pub(crate) struct Propagator<'a, D: Drive> {
    drive: &'a D,
    observable: &'a LinearOperator,
    dp: DormandPrince<f64, C64>,
    log_norm: f64,
}

impl<'a, D: Drive> Propagator<'a, D> {
    pub fn new(
        state: &StateVector,
        drive: &'a D,
        observable: &'a LinearOperator,
        tolerance: f64,
    ) -> Result<Self, DynamicsError> {
        let dim = drive.dim();
        if state.dim() != dim {
            return Err(LinalgError::DimensionMismatch { expected: dim, actual: state.dim() }.into());
        }
        if observable.dim() != dim {
            return Err(LinalgError::DimensionMismatch { expected: dim, actual: observable.dim() }.into());
        }
        if !(tolerance > 0.0) {
            return Err(DynamicsError::BadInput(format!("tolerance = {tolerance} must be > 0")));
        }
        let norm = state.norm();
        let start = state.normalized()?;
        let mut ctl = StepControl::per_unit_time(tolerance);
        // A first step of roughly one inverse spectral radius.
        let scale: f64 = match drive.dim() {
            0 => 1.0,
            _ => {
                let mut probe = vec![C64::default(); dim];
                drive.rhs(0.0, start.amplitudes(), &mut probe);
                probe.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
        };
        ctl.h_init = (0.01 / scale.max(1e-12)).min(0.1);
        Ok(Self { drive, observable, dp: DormandPrince::new(0.0, start.into_amplitudes(), ctl), log_norm: norm.ln() })
    }

    pub fn t(&self) -> f64 {
        self.dp.t()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.dp.y()
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(self.drive.basis().clone(), self.dp.y().to_vec()).expect("dimension fixed at construction")
    }

    pub fn steps(&self) -> usize {
        self.dp.accepted_steps()
    }

    pub fn advance_to(&mut self, t: f64) -> Result<(), DynamicsError> {
        let drive = self.drive;
        let sys = |t: f64, y: &[C64], dy: &mut [C64]| drive.rhs(t, y, dy);
        let log_norm = &mut self.log_norm;
        let mut bad: Option<(f64, f64)> = None;
        self.dp.advance_to(&sys, t, |tt, y| {
            if bad.is_some() {
                return HookAction::Untouched;
            }
            let n2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            if !(n2 > 1e-200) || !n2.is_finite() {
                bad = Some((tt, n2));
                return HookAction::Untouched;
            }
            let n = n2.sqrt();
            *log_norm += n.ln();
            let inv = 1.0 / n;
            y.iter_mut().for_each(|z| *z *= inv);
            HookAction::ScaledBy(inv)
        })?;
        if let Some((t, norm_sqr)) = bad {
            return Err(DynamicsError::NormUnderflow { t, norm_sqr });
        }
        Ok(())
    }

    pub fn sample(&self, first: bool) -> Result<Sample, DynamicsError> {
        let y = self.dp.y();
        Ok(Sample {
            t: self.dp.t(),
            op: expectation_raw(y, self.observable, self.observable.is_hermitian())?,
            energy: self.drive.energy(self.dp.t(), y),
            log_norm: self.log_norm,
            step: if first { 0.0 } else { self.dp.last_step() },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub tolerance: f64,
    /// Re-run at a tenfold tighter tolerance and require the final states
    /// to agree within [`VERIFY_LIMIT`].
    pub verify: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, verify: true }
    }
}

/// Sample times `0, Δ, 2Δ, …` up to and including `t_final`.
pub fn sample_times(t_final: f64, record_every: f64) -> Vec<f64> {
    let mut v = vec![0.0];
    let mut k = 1u64;
    loop {
        let t = k as f64 * record_every;
        if t >= t_final * (1.0 - 1e-12) {
            break;
        }
        v.push(t);
        k += 1;
    }
    v.push(t_final);
    v
}

fn run_fixed<D: Drive>(
    state: &StateVector,
    gen: &D,
    observable: &LinearOperator,
    times: &[f64],
    tolerance: f64,
) -> Result<(Trajectory, StateVector), DynamicsError> {
    let mut p = Propagator::new(state, gen, observable, tolerance)?;
    let mut traj = Trajectory::default();
    traj.push(&p.sample(true)?);
    for &t in &times[1..] {
        p.advance_to(t)?;
        traj.push(&p.sample(false)?);
    }
    traj.steps = p.steps();
    Ok((traj, p.state()))
}

/// Integrates from `t = 0` to `t_final`, recording every `record_every`.
/// `observable` supplies the order-parameter columns.
pub fn evolve<D: Drive>(
    state: &StateVector,
    gen: &D,
    observable: &LinearOperator,
    t_final: f64,
    record_every: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory, DynamicsError> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(DynamicsError::BadInput(format!("t_final = {t_final} must be positive")));
    }
    if !(record_every > 0.0) {
        return Err(DynamicsError::BadInput(format!("record_every = {record_every} must be positive")));
    }
    let times = sample_times(t_final, record_every);
    let (mut traj, end) = run_fixed(state, gen, observable, &times, opts.tolerance)?;
    if opts.verify {
        let (_, fine) = run_fixed(state, gen, observable, &times, opts.tolerance / 10.0)?;
        let err = end
            .amplitudes()
            .iter()
            .zip(fine.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        traj.verification_error = Some(err);
        if err > VERIFY_LIMIT {
            return Err(DynamicsError::VerificationFailed(err));
        }
    }
    Ok(traj)
}

/// Like [`evolve`] but also returns the final normalised state.
pub fn evolve_state<D: Drive>(
    state: &StateVector,
    gen: &D,
    observable: &LinearOperator,
    t_final: f64,
    record_every: f64,
    tolerance: f64,
) -> Result<(Trajectory, StateVector), DynamicsError> {
    if !(t_final > 0.0) {
        return Err(DynamicsError::BadInput(format!("t_final = {t_final} must be positive")));
    }
    run_fixed(state, gen, observable, &sample_times(t_final, record_every), tolerance)
}

/// First time `values` reaches `gamma`, linearly interpolated between
/// samples. A series that starts at or above `gamma` crosses at its first
/// time.
pub fn first_crossing(times: &[f64], values: &[f64], gamma: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v >= gamma) {
        return Some(times[0]);
    }
    for k in 1..values.len() {
        let (a, b) = (values[k - 1], values[k]);
        if b >= gamma {
            let f = if b > a { (gamma - a) / (b - a) } else { 1.0 };
            return Some(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    None
}

/// Scratch-buffer helper for drives that need two operator applications.
#[derive(Debug, Default)]
pub(crate) struct Scratch(RefCell<Vec<C64>>);

impl Scratch {
    pub fn with<R>(&self, n: usize, f: impl FnOnce(&mut [C64]) -> R) -> R {
        let mut v = self.0.borrow_mut();
        if v.len() != n {
            v.resize(n, C64::default());
        }
        f(&mut v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_rotor, symmetric_state, wavepacket_state, RotorModel};

    fn two_level(b: f64, eps: f64) -> (GeneratorSpec, StateVector) {
        let basis = Arc::new(Basis::Indexed { dim: 2 });
        let h = LinearOperator::real_diagonal(basis.clone(), [0.0, 0.0]).unwrap();
        let field = LinearOperator::real_diagonal(basis.clone(), [b, -b]).unwrap();
        let s = StateVector::new(basis, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        (GeneratorSpec::new(h, eps, field).unwrap(), s.normalized().unwrap())
    }

    #[test]
    fn tanh_oracle() {
        let (b, eps) = (0.7, 0.05);
        let (g, s) = two_level(b, eps);
        let t_final = 6.0 / (eps * b);
        let tr = evolve(&s, &g, g.breaking_field(), t_final, t_final / 600.0, &EvolveOptions::default()).unwrap();
        // |ψ⟩ ∝ e^{εbt}|+⟩ + e^{−εbt}|−⟩, so ⟨B̂⟩ = b·tanh(2εbt).
        for (t, v) in tr.times.iter().zip(&tr.op_real) {
            assert!((v - b * (2.0 * eps * b * t).tanh()).abs() < 1e-8, "t = {t}");
        }
        let tc = first_crossing(&tr.times, &tr.op_real.iter().map(|v| v / b).collect::<Vec<_>>(), 0.5).unwrap();
        assert!((2.0 * tc * eps * b - 0.5f64.atanh()).abs() < 1e-2);
    }

    #[test]
    fn stationary_phases() {
        let p = RotorModel::new(10.0, 40, 1.0);
        let free = build_rotor(&RotorModel::new(10.0, 40, 0.0)).unwrap();
        let g = GeneratorSpec::unitary(free.hamiltonian.clone()).unwrap();
        let s = wavepacket_state(&p, 0.4).unwrap();
        let (tr, end) = evolve_state(&s, &g, &free.order_parameter, 5.0, 0.5, 1e-9).unwrap();
        let basis = free.hamiltonian.basis();
        for m in [-3i64, 0, 2, 5] {
            let i = basis.lz_index(m).unwrap();
            let e = (m * m) as f64 / 20.0;
            let want = s.amplitudes()[i] * C64::from_polar(1.0, -e * 5.0);
            assert!((end.amplitudes()[i] - want).norm() < 1e-8);
        }
        assert!(tr.log_norm.iter().all(|l| l.abs() < 1e-10 * tr.steps.max(1) as f64));
    }

    #[test]
    fn symmetric_rotor_stays_symmetric() {
        let m = build_rotor(&RotorModel::new(50.0, 10, 0.0)).unwrap();
        let g = GeneratorSpec::unitary(m.hamiltonian.clone()).unwrap();
        let s = symmetric_state(&m).unwrap();
        let tr = evolve(&s, &g, &m.order_parameter, 100.0, 1.0, &EvolveOptions::default()).unwrap();
        assert!(tr.op_modulus.iter().all(|&v| v < 1e-12));
        assert_eq!(tr.verification_error, Some(0.0));
    }

    #[test]
    fn input_checks() {
        let (g, s) = two_level(1.0, 0.1);
        assert!(evolve(&s, &g, g.breaking_field(), 0.0, 0.1, &EvolveOptions::default()).is_err());
        let basis = Arc::new(Basis::Indexed { dim: 2 });
        let h = LinearOperator::real_diagonal(basis.clone(), [0.0, 0.0]).unwrap();
        let nh = LinearOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]], false).unwrap();
        assert!(matches!(GeneratorSpec::new(h, 0.1, nh), Err(DynamicsError::NonHermitianField)));
    }

    #[test]
    fn crossing_interpolates() {
        assert_eq!(first_crossing(&[0.0, 1.0, 2.0], &[0.0, 0.2, 0.6], 0.4), Some(1.5));
        assert_eq!(first_crossing(&[0.0, 1.0], &[0.0, 0.2], 0.4), None);
        assert_eq!(first_crossing(&[0.0, 1.0], &[0.5, 0.2], 0.4), Some(0.0));
    }
}
