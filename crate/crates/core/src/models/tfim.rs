use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ModelBundle, ModelError, ModelKind};
use crate::linalg::{eigen::fix_phase, ground_state, Basis};
use crate::{LinearOperator, StateVector, C64};

pub const MIN_SPINS: usize = 2;
pub const MAX_SPINS: usize = 12;

/// Transverse-field Ising chain `Ĥ(p) = −(1−p)Σσ_z − pΣσ_xσ_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimModel {
    #[serde(rename = "N_spins")]
    pub spins: usize,
    pub p: f64,
    #[serde(default = "yes")]
    pub open_boundary: bool,
}

fn yes() -> bool {
    true
}

impl TfimModel {
    pub fn new(spins: usize, p: f64) -> Self {
        Self { spins, p, open_boundary: true }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(MIN_SPINS..=MAX_SPINS).contains(&self.spins) {
            return Err(ModelError::SpinsOutOfRange(self.spins));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ModelError::InvalidParams(format!("p = {} must lie in [0, 1]", self.p)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.spins
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.spins;
        let mut b: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        // A 2-site ring would double the single bond.
        if !self.open_boundary && n > 2 {
            b.push((n - 1, 0));
        }
        b
    }
}

fn bit(n: usize, site: usize) -> usize {
    1 << (n - 1 - site)
}

/// Spin-flip operators have `n` or fewer entries per column, so they are
/// stored sparse.
fn sparse_from(n_sites: usize, mut fill: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Result<LinearOperator, ModelError> {
    let dim = 1usize << n_sites;
    let mut entries = Vec::new();
    for col in 0..dim {
        fill(col, &mut |row, v| entries.push((row, col, C64::new(v, 0.0))));
    }
    Ok(LinearOperator::sparse(Arc::new(Basis::Spins { sites: n_sites }), entries, true)?)
}

fn sigma_z_sum(n: usize, s: usize) -> f64 {
    n as f64 - 2.0 * s.count_ones() as f64
}

/// The two pieces `(−Σσ_z, −Σσ_xσ_x)`, so `Ĥ(p) = (1−p)·first + p·second`.
pub fn tfim_hamiltonian_parts(params: &TfimModel) -> Result<(LinearOperator, LinearOperator), ModelError> {
    params.validate()?;
    let n = params.spins;
    let basis = Arc::new(Basis::Spins { sites: n });
    let field = LinearOperator::real_diagonal(basis, (0..params.dim()).map(|s| -sigma_z_sum(n, s)))?;
    let bonds = params.bonds();
    let coupling = sparse_from(n, |col, put| {
        for &(i, j) in &bonds {
            put(col ^ bit(n, i) ^ bit(n, j), -1.0);
        }
    })?;
    Ok((field, coupling))
}

pub fn build_tfim(params: &TfimModel) -> Result<ModelBundle, ModelError> {
    let (field, coupling) = tfim_hamiltonian_parts(params)?;
    let n = params.spins;
    let basis = field.basis().clone();
    let hamiltonian = field.scale(1.0 - params.p).add_scaled(&coupling, params.p)?;
    let parity = LinearOperator::real_diagonal(
        basis,
        (0..params.dim()).map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }),
    )?;
    let breaking_field = sparse_from(n, |col, put| {
        for site in 0..n {
            put(col ^ bit(n, site), 1.0);
        }
    })?;
    let order_parameter = breaking_field.scale(1.0 / n as f64);
    Ok(ModelBundle {
        kind: ModelKind::Tfim(params.clone()),
        hamiltonian,
        symmetry_generator: parity,
        order_parameter,
        breaking_field,
    })
}

/// Ground state of `Ĥ` restricted to basis states of even parity, embedded
/// back in the full space.
pub(super) fn even_sector_ground_state(model: &ModelBundle) -> Result<StateVector, ModelError> {
    let h = &model.hamiltonian;
    let dim = h.dim();
    let even: Vec<usize> = (0..dim).filter(|&i| model.symmetry_generator.get(i, i).re > 0.0).collect();
    let k = even.len();
    let mut sub = vec![C64::default(); k * k];
    for (a, &i) in even.iter().enumerate() {
        for (b, &j) in even.iter().enumerate() {
            sub[a * k + b] = h.get(i, j);
        }
    }
    let sub = LinearOperator::dense(Arc::new(Basis::Indexed { dim: k }), sub, true)?;
    let (_, gs) = ground_state(&sub)?;
    let mut amps = vec![C64::default(); dim];
    for (a, &i) in even.iter().enumerate() {
        amps[i] = gs.amplitudes()[a];
    }
    fix_phase(&mut amps);
    Ok(StateVector::new(h.basis().clone(), amps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expectation_normalized, hermitian_eigen};
    use crate::models::symmetric_state;

    #[test]
    fn range_checks() {
        assert!(matches!(build_tfim(&TfimModel::new(1, 0.5)), Err(ModelError::SpinsOutOfRange(1))));
        assert!(matches!(build_tfim(&TfimModel::new(13, 0.5)), Err(ModelError::SpinsOutOfRange(13))));
        assert!(build_tfim(&TfimModel::new(4, 1.5)).is_err());
    }

    #[test]
    fn p0_ground_state_all_up() {
        let m = build_tfim(&TfimModel::new(5, 0.0)).unwrap();
        let (e, gs) = ground_state(&m.hamiltonian).unwrap();
        assert!((e + 5.0).abs() < 1e-12);
        assert!((gs.amplitudes()[0].re - 1.0).abs() < 1e-12);
        assert_eq!(expectation_normalized(&gs, &m.symmetry_generator).unwrap().re, 1.0);
        assert!(expectation_normalized(&gs, &m.order_parameter).unwrap().norm() < 1e-14);
    }

    #[test]
    fn parity_commutes_on_grid() {
        for open in [true, false] {
            for i in 0..=10 {
                let params = TfimModel { spins: 5, p: i as f64 / 10.0, open_boundary: open };
                let m = build_tfim(&params).unwrap();
                assert!(m.hamiltonian.commutator_norm(&m.symmetry_generator).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn even_cat_at_p1() {
        let m = build_tfim(&TfimModel::new(4, 1.0)).unwrap();
        let s = symmetric_state(&m).unwrap();
        let want = 1.0 / (2.0 * 2f64.sqrt());
        for (i, a) in s.amplitudes().iter().enumerate() {
            let w = if i.count_ones() % 2 == 0 { want } else { 0.0 };
            assert!((a - C64::new(w, 0.0)).norm() < 1e-10, "index {i}: {a}");
        }
    }

    #[test]
    fn doublet_splitting() {
        let p1 = build_tfim(&TfimModel::new(8, 1.0)).unwrap();
        let e = hermitian_eigen(&p1.hamiltonian).unwrap();
        assert!((e.values[1] - e.values[0]).abs() < 1e-10);
        let mut last = f64::INFINITY;
        for n in [4, 6, 8] {
            let m = build_tfim(&TfimModel::new(n, 0.95)).unwrap();
            let e = hermitian_eigen(&m.hamiltonian).unwrap();
            let split = e.values[1] - e.values[0];
            assert!(split < last);
            last = split;
        }
    }
}
