use std::f64::consts::PI;

use super::{DynamicsError, GeneratorSpec, Propagator, Trajectory, EDGE_LIMIT};
use crate::models::{build_rotor, edge_weight, wavepacket_state, RotorModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReorientOptions {
    /// Angular distance to the field direction that counts as aligned.
    pub angle_tolerance: f64,
    pub tolerance: f64,
    /// Sample spacing in units of `1/ε`.
    pub sample_spacing: f64,
    /// Longest sample spacing in absolute time.
    pub max_spacing: f64,
    /// Run length limit in units of `1/ε`.
    pub budget: f64,
}

impl Default for ReorientOptions {
    fn default() -> Self {
        Self {
            angle_tolerance: 0.1,
            tolerance: super::DEFAULT_TOLERANCE,
            sample_spacing: 1e-3,
            max_spacing: 0.05,
            budget: 50.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReorientOutcome {
    pub n: f64,
    pub epsilon: f64,
    pub t_r: Option<f64>,
    pub max_edge_weight: f64,
    pub trajectory: Trajectory,
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Starts from an ordered packet at `theta_start` and evolves it under the
/// free rotor `L̂_z²/(2N)` plus `εN cos(θ̂ − θ_field)`. `params.field`
/// fixes only the packet width `σ_m² = (N/2)√B`; the Hamiltonian carries no
/// equilibrium field.
pub fn reorientation_run(
    params: &RotorModel,
    theta_start: f64,
    theta_field: f64,
    opts: &ReorientOptions,
) -> Result<ReorientOutcome, DynamicsError> {
    let eps = params.epsilon;
    if !(eps > 0.0) {
        return Err(DynamicsError::BadInput("reorientation needs epsilon > 0".into()));
    }
    let start = wavepacket_state(params, theta_start)?;
    let free = RotorModel { field: 0.0, theta0: theta_field, ..params.clone() };
    let model = build_rotor(&free)?;
    let gen = GeneratorSpec::new(model.hamiltonian.clone(), eps, model.breaking_field.clone())?;
    let dt = (opts.sample_spacing / eps).min(opts.max_spacing);
    let t_max = opts.budget / eps;

    let mut prop = Propagator::new(&start, &gen, &model.order_parameter, opts.tolerance)?;
    let mut traj = Trajectory::default();
    let first = prop.sample(true)?;
    traj.push(&first);
    let mut max_edge = edge_weight(prop.amplitudes());
    let mut t_r = None;
    let mut prev_d = angular_distance(first.op.arg(), theta_field);
    if prev_d <= opts.angle_tolerance {
        t_r = Some(0.0);
    }
    let mut k = 1u64;
    while t_r.is_none() {
        let t = (k as f64 * dt).min(t_max);
        let t_prev = prop.t();
        prop.advance_to(t)?;
        let s = prop.sample(false)?;
        traj.push(&s);
        let w = edge_weight(prop.amplitudes());
        max_edge = max_edge.max(w);
        if w > EDGE_LIMIT {
            return Err(DynamicsError::PacketLeftWindow { t, edge_weight: w });
        }
        let d = angular_distance(s.op.arg(), theta_field);
        if d <= opts.angle_tolerance {
            let f = if prev_d > d { (prev_d - opts.angle_tolerance) / (prev_d - d) } else { 1.0 };
            t_r = Some(t_prev + f * (t - t_prev));
        }
        prev_d = d;
        if t >= t_max {
            break;
        }
        k += 1;
    }
    traj.steps = prop.steps();
    Ok(ReorientOutcome { n: params.particles, epsilon: eps, t_r, max_edge_weight: max_edge, trajectory: traj })
}

/// Reorientation time `t_r`: first time `arg⟨e^{iθ̂}⟩` is within the angle
/// tolerance of `theta_field`.
pub fn reorientation_time(
    params: &RotorModel,
    theta_start: f64,
    theta_field: f64,
    opts: &ReorientOptions,
) -> Result<f64, DynamicsError> {
    let out = reorientation_run(params, theta_start, theta_field, opts)?;
    out.t_r.ok_or(DynamicsError::NotReoriented {
        tolerance: opts.angle_tolerance,
        t_end: *out.trajectory.times.last().unwrap(),
    })
}
