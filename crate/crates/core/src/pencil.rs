//! Classical pencil balanced on a flat base of radius `b`.
//!
//! Tilting by `φ` about the base edge puts the centre of mass a horizontal
//! distance `h_c sin φ − b cos φ` beyond the pivot, so with `g = 1` and a
//! point mass at distance `√(h_c² + b²)`:
//!
//! `φ̈ = (h_c sin φ − b cos φ)/(h_c² + b²) − γ φ̇`.
//!
//! Below `φ_crit = arctan(b/h_c)` the torque is restoring and the pencil
//! settles back on its base (`φ` returns to 0); above it, the pencil falls
//! flat (`φ` reaches π/2). The fall stays in the plane of the initial tilt,
//! so the azimuth never changes.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{DormandPrince, HookAction, OdeError, StepControl};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PencilError {
    #[error("invalid pencil parameters: {0}")]
    Invalid(String),
    #[error("φ₀ = φ_crit = {0} is an unstable equilibrium")]
    Degenerate(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("neither settled nor fell by t = {0}")]
    Undecided(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilParams {
    pub b: f64,
    pub h_c: f64,
    pub phi0: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "unit")]
    pub r_max: f64,
    /// Direction of the initial tilt in the horizontal plane.
    #[serde(default)]
    pub azimuth: f64,
}

fn default_damping() -> f64 {
    0.5
}

fn unit() -> f64 {
    1.0
}

impl PencilParams {
    pub fn new(b: f64, h_c: f64, phi0: f64) -> Self {
        Self { b, h_c, phi0, damping: default_damping(), r_max: 1.0, azimuth: 0.0 }
    }

    pub fn validate(&self) -> Result<(), PencilError> {
        let mut bad = Vec::new();
        if !(self.b >= 0.0) || !self.b.is_finite() {
            bad.push(format!("b = {} must be ≥ 0", self.b));
        }
        if !(self.h_c > 0.0) || !self.h_c.is_finite() {
            bad.push(format!("h_c = {} must be > 0", self.h_c));
        }
        if !(0.0..FRAC_PI_2).contains(&self.phi0) {
            bad.push(format!("phi0 = {} must lie in [0, π/2)", self.phi0));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            bad.push(format!("damping = {} must be ≥ 0", self.damping));
        }
        if !(self.r_max > 0.0) {
            bad.push(format!("r_max = {} must be > 0", self.r_max));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(PencilError::Invalid(bad.join("; ")))
        }
    }
}

/// Tipping angle `arctan(b/h_c)`.
pub fn critical_angle(b: f64, h_c: f64) -> f64 {
    b.atan2(h_c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    /// `r/r_max = sin φ` while upright-ish; pinned to 0 or 1 at the end.
    pub ratio: Vec<f64>,
    pub final_ratio: f64,
    pub azimuth: f64,
}

const T_LIMIT: f64 = 1e5;

pub fn simulate_fall(params: &PencilParams) -> Result<FallTrajectory, PencilError> {
    params.validate()?;
    let crit = critical_angle(params.b, params.h_c);
    if params.phi0 == crit {
        return Err(PencilError::Degenerate(crit));
    }
    let (b, h, gamma) = (params.b, params.h_c, params.damping);
    let inertia = h * h + b * b;
    let sys = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = (h * y[0].sin() - b * y[0].cos()) / inertia - gamma * y[1];
    };
    // Absolute tolerance far below the smallest angles of interest.
    let atol = (1e-6 * params.phi0.min((crit - params.phi0).abs().max(1e-300))).clamp(1e-300, 1e-12);
    let mut dp = DormandPrince::new(0.0, vec![params.phi0, 0.0], StepControl::mixed(atol, 1e-10));
    let mut out = FallTrajectory {
        times: vec![0.0],
        phi: vec![params.phi0],
        ratio: vec![params.phi0.sin()],
        final_ratio: f64::NAN,
        azimuth: params.azimuth,
    };
    // Settling is checked first so φ₀ = 0 resolves immediately.
    let mut t = 0.0;
    let dt = 0.05 * inertia.sqrt();
    loop {
        let phi = dp.y()[0];
        if phi <= 0.0 {
            out.final_ratio = 0.0;
            break;
        }
        if phi >= FRAC_PI_2 {
            out.final_ratio = 1.0;
            break;
        }
        if t >= T_LIMIT {
            return Err(PencilError::Undecided(t));
        }
        t += dt;
        dp.advance_to(&sys, t, |_, _| HookAction::Untouched)?;
        let phi = dp.y()[0];
        out.times.push(dp.t());
        out.phi.push(phi);
        out.ratio.push(phi.clamp(0.0, FRAC_PI_2).sin());
    }
    *out.ratio.last_mut().unwrap() = out.final_ratio;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilScan {
    pub b_grid: Vec<f64>,
    pub phi0_grid: Vec<f64>,
    /// `table[i][j]` = final ratio at `(b_grid[i], phi0_grid[j])`.
    pub table: Vec<Vec<f64>>,
}

impl PencilScan {
    /// Inner limit `φ₀ → 0` at each `b`, read at the end of the φ₀ grid.
    pub fn phi0_first_sequence(&self) -> Vec<f64> {
        self.table.iter().map(|row| *row.last().unwrap()).collect()
    }

    /// Inner limit `b → 0` at each `φ₀`, read at the end of the b grid.
    pub fn b_first_sequence(&self) -> Vec<f64> {
        self.table.last().unwrap().clone()
    }

    /// `lim_{b→0} lim_{φ₀→0}`. Meaningful when the φ₀ grid reaches well
    /// below `arctan(b/h_c)` for every b.
    pub fn phi0_first_limit(&self) -> f64 {
        *self.phi0_first_sequence().last().unwrap()
    }

    /// `lim_{φ₀→0} lim_{b→0}`. Meaningful when the b grid reaches well below
    /// `φ₀·h_c` for every φ₀.
    pub fn b_first_limit(&self) -> f64 {
        *self.b_first_sequence().last().unwrap()
    }
}

fn check_descending(name: &str, g: &[f64]) -> Result<(), PencilError> {
    if g.is_empty() || g.iter().any(|v| !(*v > 0.0)) {
        return Err(PencilError::Invalid(format!("{name} grid must be non-empty and positive")));
    }
    if g.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(PencilError::Invalid(format!("{name} grid must descend strictly")));
    }
    Ok(())
}

/// Final ratios over a `b × φ₀` grid at `h_c = 1`, default damping.
pub fn pencil_limit_scan(b_grid: &[f64], phi0_grid: &[f64]) -> Result<PencilScan, PencilError> {
    check_descending("b", b_grid)?;
    check_descending("phi0", phi0_grid)?;
    let table = b_grid
        .iter()
        .map(|&b| {
            phi0_grid
                .iter()
                .map(|&phi0| simulate_fall(&PencilParams::new(b, 1.0, phi0)).map(|f| f.final_ratio))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PencilScan { b_grid: b_grid.to_vec(), phi0_grid: phi0_grid.to_vec(), table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(critical_angle(0.0, 1.0), 0.0);
        assert!((critical_angle(1.0, 1.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((critical_angle(0.01, 1.0) - 0.0099996667).abs() < 1e-9);
    }

    #[test]
    fn outcomes() {
        assert_eq!(simulate_fall(&PencilParams::new(0.1, 1.0, 0.0)).unwrap().final_ratio, 0.0);
        assert_eq!(simulate_fall(&PencilParams::new(0.0, 1.0, 1e-6)).unwrap().final_ratio, 1.0);
        assert_eq!(simulate_fall(&PencilParams::new(0.1, 1.0, 0.01)).unwrap().final_ratio, 0.0);
        assert_eq!(simulate_fall(&PencilParams::new(0.1, 1.0, 0.2)).unwrap().final_ratio, 1.0);
        assert!(matches!(simulate_fall(&PencilParams::new(0.0, 1.0, 0.0)), Err(PencilError::Degenerate(_))));
    }

    #[test]
    fn azimuth_kept() {
        let mut p = PencilParams::new(0.0, 1.0, 0.1);
        p.azimuth = 2.3;
        assert_eq!(simulate_fall(&p).unwrap().azimuth, 2.3);
    }

    #[test]
    fn limit_orders() {
        let phi0_first = pencil_limit_scan(&[1e-3], &[1e-1, 1e-2, 1e-3 * 0.5, 1e-4, 1e-5, 1e-6]).unwrap();
        assert_eq!(phi0_first.phi0_first_limit(), 0.0);
        let bs: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
        let b_first = pencil_limit_scan(&bs, &[1e-6]).unwrap();
        assert_eq!(b_first.b_first_limit(), 1.0);
        // Diagonal b = φ₀/2 always lies above threshold.
        for &phi in &[1e-1, 1e-3, 1e-5] {
            assert_eq!(simulate_fall(&PencilParams::new(phi / 2.0, 1.0, phi)).unwrap().final_ratio, 1.0);
        }
    }
}
