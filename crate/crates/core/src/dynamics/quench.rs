use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{evolve, DynamicsError, Drive, EvolveOptions, Scratch, Trajectory};
use crate::linalg::{expectation_raw, Basis};
use crate::models::{build_tfim, tfim_hamiltonian_parts, TfimModel};
use crate::{LinearOperator, StateVector, C64};

/// Piecewise-linear control schedule `p(t)` through `(t, p)` knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSchedule {
    pub knots: Vec<(f64, f64)>,
}

impl RampSchedule {
    pub fn linear(total_time: f64) -> Self {
        Self { knots: vec![(0.0, 0.0), (total_time, 1.0)] }
    }

    pub fn total_time(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.0)
    }

    /// Must start at `(0, 0)`, end at `p = 1`, have increasing times and
    /// stay inside `[0, 1]`.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::BadSchedule(m.into()));
        if self.knots.len() < 2 {
            return bad("need at least two knots");
        }
        if self.knots[0] != (0.0, 0.0) {
            return bad("schedule must start at t = 0 with p = 0");
        }
        if self.knots.last().unwrap().1 != 1.0 {
            return bad("schedule must end at p = 1");
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return bad("knot times must increase strictly");
        }
        if self.knots.iter().any(|k| !(0.0..=1.0).contains(&k.1) || !k.0.is_finite()) {
            return bad("p must stay within [0, 1]");
        }
        Ok(())
    }

    pub fn p(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                let f = (t - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + f * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSpec {
    /// Chain; its `p` is ignored in favour of the schedule.
    pub model: TfimModel,
    pub schedule: RampSchedule,
    pub epsilon: f64,
    /// `B̂ = field_sign · Σσ_x`; ±1 picks the favoured orientation.
    #[serde(default = "one")]
    pub field_sign: f64,
    #[serde(default = "default_record")]
    pub record_every: f64,
}

fn one() -> f64 {
    1.0
}

fn default_record() -> f64 {
    0.5
}

/// `Ĥ(p(t)) = A + p(t)·D` with `A = −Σσ_z`, `D = −Σσ_xσ_x + Σσ_z`.
struct RampDrive {
    field: LinearOperator,
    delta: LinearOperator,
    /// `−iA + εB̂`.
    static_part: LinearOperator,
    schedule: RampSchedule,
    scratch: Scratch,
}

impl Drive for RampDrive {
    fn basis(&self) -> &Arc<Basis> {
        self.field.basis()
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.static_part.apply_into(y, dy);
        let w = C64::new(0.0, -self.schedule.p(t));
        self.scratch.with(y.len(), |s| {
            self.delta.apply_into(y, s);
            for (d, x) in dy.iter_mut().zip(s.iter()) {
                *d += w * x;
            }
        });
    }

    fn energy(&self, t: f64, y: &[C64]) -> f64 {
        let a = expectation_raw(y, &self.field, true).map_or(f64::NAN, |e| e.re);
        let d = expectation_raw(y, &self.delta, true).map_or(f64::NAN, |e| e.re);
        a + self.schedule.p(t) * d
    }
}

/// Ramps the chain from `p = 0` to `p = 1` starting from the `p = 0`
/// ground state (all spins up). The trajectory's order parameter is
/// `(1/N)Σσ_x`; read its sign from `op_real`.
pub fn quench_sweep(spec: &QuenchSpec) -> Result<Trajectory, DynamicsError> {
    spec.schedule.validate()?;
    if !(spec.epsilon >= 0.0) {
        return Err(DynamicsError::BadInput(format!("epsilon = {} must be ≥ 0", spec.epsilon)));
    }
    let base = TfimModel { p: 0.0, ..spec.model.clone() };
    let (field, coupling) = tfim_hamiltonian_parts(&base)?;
    let bundle = build_tfim(&base)?;
    let delta = coupling.add_scaled(&field, -1.0)?;
    let static_part = field.linear_combination(
        C64::new(0.0, -1.0),
        &bundle.breaking_field,
        C64::new(spec.epsilon * spec.field_sign, 0.0),
    )?;
    let drive = RampDrive { field, delta, static_part, schedule: spec.schedule.clone(), scratch: Scratch::default() };
    let start = StateVector::basis_vector(drive.basis().clone(), 0)?;
    let opts = EvolveOptions { verify: false, ..Default::default() };
    evolve(&start, &drive, &bundle.order_parameter, spec.schedule.total_time(), spec.record_every, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_checks() {
        assert!(RampSchedule::linear(10.0).validate().is_ok());
        assert!(RampSchedule { knots: vec![(0.0, 0.0), (1.0, 0.5)] }.validate().is_err());
        assert!(RampSchedule { knots: vec![(0.0, 0.1), (1.0, 1.0)] }.validate().is_err());
        let s = RampSchedule { knots: vec![(0.0, 0.0), (2.0, 0.5), (3.0, 1.0)] };
        assert_eq!(s.p(1.0), 0.25);
        assert_eq!(s.p(2.5), 0.75);
        assert_eq!(s.p(9.0), 1.0);
    }

    #[test]
    fn small_chain_quench() {
        let mk = |eps, sign| QuenchSpec {
            model: TfimModel::new(4, 0.0),
            schedule: RampSchedule::linear(20.0),
            epsilon: eps,
            field_sign: sign,
            record_every: 0.5,
        };
        let sym = quench_sweep(&mk(0.0, 1.0)).unwrap();
        assert!(sym.op_modulus.iter().all(|&m| m < 1e-12));
        let up = quench_sweep(&mk(5e-2, 1.0)).unwrap();
        let down = quench_sweep(&mk(5e-2, -1.0)).unwrap();
        assert!(*up.op_real.last().unwrap() > 0.5);
        assert!((up.op_real.last().unwrap() + down.op_real.last().unwrap()).abs() < 1e-8);
    }
}
