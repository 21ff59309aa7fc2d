use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ModelBundle, ModelError, ModelKind};
use crate::linalg::Basis;
use crate::{LinearOperator, StateVector, C64};

/// Planar rotor with moment of inertia `N`, truncated to `|m| ≤ cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorModel {
    #[serde(rename = "N")]
    pub particles: f64,
    pub cutoff: usize,
    /// Equilibrium symmetry-breaking field per particle.
    #[serde(rename = "B", default)]
    pub field: f64,
    #[serde(default)]
    pub theta0: f64,
    /// Unitarity-breaking strength; only read by the dynamics.
    #[serde(default)]
    pub epsilon: f64,
}

impl RotorModel {
    pub fn new(particles: f64, cutoff: usize, field: f64) -> Self {
        Self { particles, cutoff, field, theta0: 0.0, epsilon: 0.0 }
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut bad = Vec::new();
        if !(self.particles >= 1.0) || !self.particles.is_finite() {
            bad.push(format!("N = {} must be ≥ 1", self.particles));
        }
        if self.cutoff < 4 {
            bad.push(format!("cutoff = {} must be ≥ 4", self.cutoff));
        }
        if !(self.field >= 0.0) || !self.field.is_finite() {
            bad.push(format!("B = {} must be ≥ 0", self.field));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            bad.push(format!("epsilon = {} must be ≥ 0", self.epsilon));
        }
        if !self.theta0.is_finite() {
            bad.push("theta0 must be finite".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidParams(bad.join("; ")))
        }
    }

    /// Variance in `m` of the harmonic ground state, `σ_m² = (N/2)√B`.
    pub fn packet_variance(&self) -> f64 {
        0.5 * self.particles * self.field.sqrt()
    }

    /// Cutoff at which a harmonic packet has edge amplitude below 1e-8
    /// (plus headroom), never below 4.
    pub fn packet_cutoff(&self) -> usize {
        let sigma = self.packet_variance().sqrt();
        ((9.0 * sigma).ceil() as usize + 8).max(4)
    }

    fn basis(&self) -> Arc<Basis> {
        Arc::new(Basis::AngularMomentum { cutoff: self.cutoff })
    }

    /// `cos(θ̂ − θ₀)`: `⟨m+1|·|m⟩ = e^{−iθ₀}/2`, `⟨m−1|·|m⟩ = e^{iθ₀}/2`.
    fn cosine(&self, scale: f64) -> Result<LinearOperator, ModelError> {
        let n = self.dim();
        let down = C64::from_polar(0.5 * scale, -self.theta0);
        let up = down.conj();
        Ok(LinearOperator::banded(
            self.basis(),
            1,
            1,
            vec![vec![down; n - 1], vec![C64::default(); n], vec![up; n - 1]],
            true,
        )?)
    }
}

/// Builds `Ĥ = L̂_z²/(2N) − B·N·cos(θ̂ − θ₀)` in the `|m|≤M` basis, all
/// operators in band storage.
pub fn build_rotor(params: &RotorModel) -> Result<ModelBundle, ModelError> {
    params.validate()?;
    let basis = params.basis();
    let n = params.dim();
    let big_n = params.particles;
    let m_values = (-(params.cutoff as i64)..=params.cutoff as i64).map(|m| m as f64);

    let lz = LinearOperator::real_diagonal(basis.clone(), m_values.clone())?;
    let kinetic = LinearOperator::real_diagonal(basis.clone(), m_values.map(|m| m * m / (2.0 * big_n)))?;
    let breaking_field = params.cosine(big_n)?;
    let hamiltonian = kinetic.add_scaled(&breaking_field, -params.field)?;
    let order_parameter = LinearOperator::banded(
        basis,
        1,
        0,
        vec![vec![C64::new(1.0, 0.0); n - 1], vec![C64::default(); n]],
        false,
    )?;
    Ok(ModelBundle {
        kind: ModelKind::Rotor(params.clone()),
        hamiltonian,
        symmetry_generator: lz,
        order_parameter,
        breaking_field,
    })
}

/// Gaussian packet `ψ(m) ∝ exp(−m²/(4σ_m²))·exp(−i m θ_c)` with
/// `σ_m² = (N/2)√B`, centred on orientation `theta_c`.
pub fn wavepacket_state(params: &RotorModel, theta_c: f64) -> Result<StateVector, ModelError> {
    params.validate()?;
    let var = params.packet_variance();
    if !(var >= 1.0) {
        return Err(ModelError::NarrowPacket { sigma_m_sq: var });
    }
    let c = params.cutoff as i64;
    let amps: Vec<C64> = (-c..=c)
        .map(|m| {
            let m = m as f64;
            C64::from_polar((-m * m / (4.0 * var)).exp(), -m * theta_c)
        })
        .collect();
    let s = StateVector::new(params.basis(), amps)?;
    Ok(s.normalized()?)
}

/// Weight `|ψ_{±M}|²/⟨ψ|ψ⟩` on the two outermost rotor states.
pub fn edge_weight(amplitudes: &[C64]) -> f64 {
    let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let (first, last) = (amplitudes[0], amplitudes[amplitudes.len() - 1]);
    (first.norm_sqr() + last.norm_sqr()) / n2
}
