//! Model systems: the planar quantum rotor ("quantum pencil") and the
//! transverse-field Ising chain.

mod rotor;
mod tfim;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::{LinearOperator, StateVector};

pub use rotor::{build_rotor, edge_weight, wavepacket_state, RotorModel};
pub use tfim::{build_tfim, tfim_hamiltonian_parts, TfimModel, MAX_SPINS, MIN_SPINS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("chain length {0} outside supported range {MIN_SPINS}..={MAX_SPINS}")]
    SpinsOutOfRange(usize),
    #[error("wavepacket width σ_m² = {sigma_m_sq} < 1; the field is too weak to support a broken state")]
    NarrowPacket { sigma_m_sq: f64 },
    #[error("symmetric state has order parameter {0:e}, expected 0")]
    NotSymmetric(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Rotor(RotorModel),
    Tfim(TfimModel),
}

/// A model's operators.
///
/// * rotor: `symmetry_generator = L̂_z`, `order_parameter = e^{iθ̂}` (a pure
///   raising shift, non-Hermitian), `breaking_field = N cos(θ̂ − θ₀)`.
/// * chain: `symmetry_generator = Πσ_z`, `order_parameter = (1/N)Σσ_x`,
///   `breaking_field = Σσ_x`.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub hamiltonian: LinearOperator,
    pub symmetry_generator: LinearOperator,
    pub order_parameter: LinearOperator,
    pub breaking_field: LinearOperator,
}

impl ModelBundle {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}

/// The symmetric starting state: `|m = 0⟩` for the rotor; for the chain,
/// the ground state of `Ĥ(p)` inside the even-parity sector, with its
/// largest-modulus amplitude made real positive.
pub fn symmetric_state(model: &ModelBundle) -> Result<StateVector, ModelError> {
    let state = match &model.kind {
        ModelKind::Rotor(_) => {
            let b = model.hamiltonian.basis().clone();
            let idx = b.lz_index(0).expect("rotor basis");
            StateVector::basis_vector(b, idx)?
        }
        ModelKind::Tfim(_) => tfim::even_sector_ground_state(model)?,
    };
    let op = crate::linalg::expectation_normalized(&state, &model.order_parameter)?;
    if op.norm() > 1e-12 {
        return Err(ModelError::NotSymmetric(op.norm()));
    }
    Ok(state)
}
