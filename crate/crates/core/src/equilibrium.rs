//! Ground-state diagnostics for the rotor: order parameter, tower of
//! states, and grid scans over `(N, B)` showing that the limits `B → 0`
//! and `N → ∞` do not commute.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{expectation_normalized, ground_state, LinalgError};
use crate::models::{build_rotor, ModelBundle, ModelError, ModelKind, RotorModel};

pub const CUTOFF_HARD_LIMIT: usize = 100_000;
const ENERGY_RTOL: f64 = 1e-10;
const OP_ATOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cutoff search exceeded the hard limit {CUTOFF_HARD_LIMIT} (last tried {last})")]
    CutoffLimit { last: usize },
    #[error("operation needs a rotor model")]
    NotRotor,
    #[error("tower of states needs B = 0 (got B = {0})")]
    FieldPresent(f64),
    #[error("requested {requested} levels but only {available} exist at this cutoff")]
    TooManyLevels { requested: usize, available: usize },
    #[error("invalid grid: {0}")]
    BadGrid(String),
}

/// `|⟨gs|Ô|gs⟩|` for the model's order parameter.
pub fn order_parameter_eq(model: &ModelBundle) -> Result<f64, EquilibriumError> {
    let (_, gs) = ground_state(&model.hamiltonian)?;
    Ok(expectation_normalized(&gs, &model.order_parameter)?.norm())
}

fn energy_and_op(params: &RotorModel) -> Result<(f64, f64), EquilibriumError> {
    let model = build_rotor(params)?;
    let (e, gs) = ground_state(&model.hamiltonian)?;
    Ok((e, expectation_normalized(&gs, &model.order_parameter)?.norm()))
}

/// Result of a converged cutoff search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffChoice {
    pub cutoff: usize,
    pub energy: f64,
    pub op_modulus: f64,
}

/// Smallest cutoff on the doubling ladder starting at `max(4, ⌈6σ_m⌉)` for
/// which doubling changes the ground energy by less than 1e-10 relative to
/// `max(|E₀|, 1/(2N))` and the order-parameter modulus by less than 1e-6.
pub fn cutoff_converge(params: &RotorModel) -> Result<CutoffChoice, EquilibriumError> {
    search_cutoff(params).map_err(|(e, _)| e)
}

fn search_cutoff(params: &RotorModel) -> Result<CutoffChoice, (EquilibriumError, Option<CutoffChoice>)> {
    params.clone().with_cutoff(4).validate().map_err(|e| (e.into(), None))?;
    let sigma = params.packet_variance().sqrt();
    let mut m = ((6.0 * sigma).ceil() as usize).max(4);
    let mut here = energy_and_op(&params.clone().with_cutoff(m)).map_err(|e| (e, None))?;
    loop {
        let guess = CutoffChoice { cutoff: m, energy: here.0, op_modulus: here.1 };
        if 2 * m > CUTOFF_HARD_LIMIT {
            return Err((EquilibriumError::CutoffLimit { last: m }, Some(guess)));
        }
        let next = energy_and_op(&params.clone().with_cutoff(2 * m)).map_err(|e| (e, Some(guess)))?;
        let de = (next.0 - here.0).abs();
        // Near B = 0 the energy itself vanishes; the rotor quantum 1/(2N)
        // keeps the relative test meaningful there.
        let unit = here.0.abs().max(next.0.abs()).max(0.5 / params.particles);
        if de <= ENERGY_RTOL * unit && (next.1 - here.1).abs() < OP_ATOL {
            return Ok(guess);
        }
        m *= 2;
        here = next;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    /// `|m|` of the level.
    pub m: u64,
    pub energy: f64,
    pub degeneracy: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerSpectrum {
    pub n: f64,
    pub b: f64,
    /// Lowest levels, energies non-decreasing.
    pub levels: Vec<TowerLevel>,
}

impl TowerSpectrum {
    /// `E_m − E_0` for each listed level after the first.
    pub fn gaps(&self) -> Vec<f64> {
        let e0 = self.levels[0].energy;
        self.levels[1..].iter().map(|l| l.energy - e0).collect()
    }
}

/// The `k` lowest distinct levels of the free rotor, labelled by `|m|`.
pub fn tower_spectrum(model: &ModelBundle, k: usize) -> Result<TowerSpectrum, EquilibriumError> {
    let ModelKind::Rotor(p) = &model.kind else {
        return Err(EquilibriumError::NotRotor);
    };
    if p.field != 0.0 {
        return Err(EquilibriumError::FieldPresent(p.field));
    }
    let available = p.cutoff + 1;
    if k > available {
        return Err(EquilibriumError::TooManyLevels { requested: k, available });
    }
    // With B = 0 the Hamiltonian is diagonal in |m⟩; levels ±m pair up.
    let basis = model.hamiltonian.basis();
    let levels = (0..k as i64)
        .map(|m| {
            let e = model.hamiltonian.get(basis.lz_index(m).unwrap(), basis.lz_index(m).unwrap()).re;
            TowerLevel { m: m as u64, energy: e, degeneracy: if m == 0 { 1 } else { 2 } }
        })
        .collect();
    Ok(TowerSpectrum { n: p.particles, b: p.field, levels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitScanPoint {
    pub n: f64,
    pub b: f64,
    pub cutoff: usize,
    pub op_modulus: f64,
    pub converged: bool,
    /// Set when the point could not be evaluated at all.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitScanResult {
    pub n_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    /// Row-major over `(N, B)`, both ascending.
    pub points: Vec<LimitScanPoint>,
}

impl LimitScanResult {
    pub fn get(&self, n: f64, b: f64) -> Option<&LimitScanPoint> {
        self.points.iter().find(|p| p.n == n && p.b == b)
    }

    /// Pairs of neighbouring grid points where the modulus drops by more
    /// than `tol` when N or B increases.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<(usize, usize)> {
        let nb = self.b_grid.len();
        let mut out = Vec::new();
        for i in 0..self.n_grid.len() {
            for j in 0..nb {
                let here = self.points[i * nb + j].op_modulus;
                if j + 1 < nb && self.points[i * nb + j + 1].op_modulus < here - tol {
                    out.push((i * nb + j, i * nb + j + 1));
                }
                if i + 1 < self.n_grid.len() && self.points[(i + 1) * nb + j].op_modulus < here - tol {
                    out.push((i * nb + j, (i + 1) * nb + j));
                }
            }
        }
        out
    }

    /// Modulus at the largest N and smallest B: taking B → 0 first.
    pub fn field_first_value(&self) -> f64 {
        let nb = self.b_grid.len();
        self.points[(self.n_grid.len() - 1) * nb].op_modulus
    }

    /// All points at fixed N, ascending in B.
    pub fn row(&self, n: f64) -> Vec<&LimitScanPoint> {
        self.points.iter().filter(|p| p.n == n).collect()
    }

    /// All points at fixed B, ascending in N.
    pub fn column(&self, b: f64) -> Vec<&LimitScanPoint> {
        self.points.iter().filter(|p| p.b == b).collect()
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<(), EquilibriumError> {
    if g.is_empty() {
        return Err(EquilibriumError::BadGrid(format!("{name} grid is empty")));
    }
    if g.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(EquilibriumError::BadGrid(format!("{name} grid must be positive and finite")));
    }
    if g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EquilibriumError::BadGrid(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

/// One grid point of a scan. Failures are folded into the returned row.
pub fn limit_scan_point(n: f64, b: f64, theta0: f64) -> LimitScanPoint {
    let params = RotorModel::new(n, 4, b).with_theta0(theta0);
    match search_cutoff(&params) {
        Ok(c) => LimitScanPoint { n, b, cutoff: c.cutoff, op_modulus: c.op_modulus, converged: true, error: None },
        Err((e, partial)) => LimitScanPoint {
            n,
            b,
            cutoff: partial.map_or(0, |c| c.cutoff),
            op_modulus: partial.map_or(f64::NAN, |c| c.op_modulus),
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

/// Validates the grids and lays out the `(N, B)` points in row-major order.
pub fn limit_scan_grid(n_grid: &[f64], b_grid: &[f64]) -> Result<Vec<(f64, f64)>, EquilibriumError> {
    check_grid("N", n_grid)?;
    for &n in n_grid {
        if n < 1.0 {
            return Err(EquilibriumError::BadGrid("N values must be ≥ 1".into()));
        }
    }
    check_grid("B", b_grid)?;
    Ok(n_grid.iter().flat_map(|&n| b_grid.iter().map(move |&b| (n, b))).collect())
}

/// Sequential scan; see [`limit_scan_point`] for concurrent drivers.
pub fn limit_scan(n_grid: &[f64], b_grid: &[f64], theta0: f64) -> Result<LimitScanResult, EquilibriumError> {
    let points = limit_scan_grid(n_grid, b_grid)?
        .into_iter()
        .map(|(n, b)| limit_scan_point(n, b, theta0))
        .collect();
    Ok(LimitScanResult { n_grid: n_grid.to_vec(), b_grid: b_grid.to_vec(), points })
}

/// `exp(−1/(4N√B))`, the order parameter of a harmonic ground state.
pub fn harmonic_oracle(n: f64, b: f64) -> f64 {
    (-1.0 / (4.0 * n * b.sqrt())).exp()
}

/// `2N²B`, first-order perturbation theory in the field.
pub fn perturbative_oracle(n: f64, b: f64) -> f64 {
    2.0 * n * n * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_has_no_order() {
        for n in [1.0, 10.0, 1000.0] {
            let m = build_rotor(&RotorModel::new(n, 8, 0.0)).unwrap();
            assert!(order_parameter_eq(&m).unwrap() < 1e-12);
        }
    }

    #[test]
    fn oracles() {
        let c = cutoff_converge(&RotorModel::new(100.0, 4, 1e-3)).unwrap();
        assert!((c.op_modulus - harmonic_oracle(100.0, 1e-3)).abs() < 0.02);
        let c = cutoff_converge(&RotorModel::new(100.0, 4, 1e-8)).unwrap();
        assert!((c.op_modulus / 2e-4 - 1.0).abs() < 0.2);
    }

    #[test]
    fn cutoff_search() {
        assert_eq!(cutoff_converge(&RotorModel::new(100.0, 4, 0.0)).unwrap().cutoff, 4);
        let m = cutoff_converge(&RotorModel::new(100.0, 4, 1e-2)).unwrap().cutoff;
        assert!((14..=28).contains(&m), "{m}");
        let mut last = 0;
        for b in [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let m = cutoff_converge(&RotorModel::new(50.0, 4, b)).unwrap().cutoff;
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn tower() {
        let m = build_rotor(&RotorModel::new(50.0, 8, 0.0)).unwrap();
        let t = tower_spectrum(&m, 3).unwrap();
        let g = t.gaps();
        assert!((g[0] - 0.01).abs() < 1e-12 && (g[1] - 0.04).abs() < 1e-12);
        assert!(tower_spectrum(&m, 10).is_err());
        let broken = build_rotor(&RotorModel::new(50.0, 8, 1e-3)).unwrap();
        assert!(matches!(tower_spectrum(&broken, 2), Err(EquilibriumError::FieldPresent(_))));
    }

    #[test]
    fn scan_shape_and_gauge() {
        let ns = [10.0, 100.0];
        let bs = [1e-6, 1e-3];
        let a = limit_scan(&ns, &bs, 0.0).unwrap();
        let b = limit_scan(&ns, &bs, std::f64::consts::FRAC_PI_3).unwrap();
        assert_eq!(a.points.len(), 4);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.op_modulus - y.op_modulus).abs() < 1e-10);
        }
        assert!(a.monotonicity_violations(1e-8).is_empty());
        assert!(limit_scan(&[100.0, 10.0], &bs, 0.0).is_err());
        assert!(limit_scan(&ns, &[0.0, 1e-3], 0.0).is_err());
    }
}
