use super::{first_crossing, DynamicsError, GeneratorSpec, Propagator, Trajectory, EDGE_LIMIT};
use crate::models::{build_rotor, edge_weight, symmetric_state, RotorModel};
use crate::C64;

/// How a collapse run is sampled and when it stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseOptions {
    /// Threshold on `|⟨e^{iθ̂}⟩|`.
    pub gamma: f64,
    pub tolerance: f64,
    /// Sample spacing in units of `1/(εN)`.
    pub sample_spacing: f64,
    /// Run length limit in units of `1/(εN)`.
    pub budget: f64,
    /// Run length limit when ε = 0, in absolute time.
    pub unitary_budget: f64,
    /// Steady state: relative change below `steady_rtol` across the last
    /// `steady_window` (units of `1/(εN)`).
    pub steady_window: f64,
    pub steady_rtol: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            tolerance: super::DEFAULT_TOLERANCE,
            sample_spacing: 2e-3,
            budget: 100.0,
            unitary_budget: 100.0,
            steady_window: 1.0,
            steady_rtol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CollapseOutcome {
    pub n: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// `None` when the threshold was never reached.
    pub t_c: Option<f64>,
    pub steady: bool,
    pub t_end: f64,
    pub final_op: C64,
    pub max_edge_weight: f64,
    pub trajectory: Trajectory,
}

impl CollapseOutcome {
    /// Crossing time of another threshold on the same run.
    pub fn crossing(&self, gamma: f64) -> Option<f64> {
        first_crossing(&self.trajectory.times, &self.trajectory.op_modulus, gamma)
    }
}

/// Evolves the symmetric rotor state `|m = 0⟩` under `−iĤ + εB̂`,
/// `B̂ = N cos(θ̂ − θ₀)`, until the order parameter is steady or the budget
/// runs out. Never fails on a missed threshold; see [`collapse_time`].
pub fn collapse_run(params: &RotorModel, opts: &CollapseOptions) -> Result<CollapseOutcome, DynamicsError> {
    let model = build_rotor(params)?;
    let start = symmetric_state(&model)?;
    let eps = params.epsilon;
    let gen = GeneratorSpec::new(model.hamiltonian.clone(), eps, model.breaking_field.clone())?;
    let (dt, t_max, window) = if eps > 0.0 {
        let unit = 1.0 / (eps * params.particles);
        (opts.sample_spacing * unit, opts.budget * unit, opts.steady_window * unit)
    } else {
        (opts.unitary_budget / 1000.0, opts.unitary_budget, f64::INFINITY)
    };
    let lag = (window / dt).round().max(1.0) as usize;

    let mut prop = Propagator::new(&start, &gen, &model.order_parameter, opts.tolerance)?;
    let mut traj = Trajectory::default();
    traj.push(&prop.sample(true)?);
    let mut max_edge = edge_weight(prop.amplitudes());
    let mut steady = false;
    let mut k = 1u64;
    let mut last;
    loop {
        let t = (k as f64 * dt).min(t_max);
        prop.advance_to(t)?;
        last = prop.sample(false)?;
        traj.push(&last);
        let w = edge_weight(prop.amplitudes());
        max_edge = max_edge.max(w);
        if w > EDGE_LIMIT {
            return Err(DynamicsError::PacketLeftWindow { t, edge_weight: w });
        }
        let n = traj.len();
        if n > lag {
            let now = traj.op_modulus[n - 1];
            let then = traj.op_modulus[n - 1 - lag];
            if now > 0.0 && (now - then).abs() <= opts.steady_rtol * now {
                steady = true;
                break;
            }
        }
        if t >= t_max {
            break;
        }
        k += 1;
    }
    traj.steps = prop.steps();
    Ok(CollapseOutcome {
        n: params.particles,
        epsilon: eps,
        gamma: opts.gamma,
        t_c: first_crossing(&traj.times, &traj.op_modulus, opts.gamma),
        steady,
        t_end: last.t,
        final_op: last.op,
        max_edge_weight: max_edge,
        trajectory: traj,
    })
}

/// Collapse time `t_c`: first time `|⟨e^{iθ̂}⟩| ≥ γ`.
pub fn collapse_time(params: &RotorModel, opts: &CollapseOptions) -> Result<f64, DynamicsError> {
    let out = collapse_run(params, opts)?;
    out.t_c.ok_or(DynamicsError::ThresholdNotReached {
        gamma: opts.gamma,
        t_end: out.t_end,
        last: out.final_op.norm(),
    })
}

#[derive(Clone, Debug)]
pub struct EnsembleSummary {
    pub thetas: Vec<f64>,
    pub outcomes: Vec<CollapseOutcome>,
    /// Final `⟨e^{iθ̂}⟩` averaged over field orientations.
    pub mean_final_op: C64,
}

/// Repeats the collapse for each field orientation in `thetas` and
/// averages the final order parameter. Each run picks its own θ₀; the
/// ensemble over a uniform grid averages back to zero.
pub fn collapse_ensemble(
    params: &RotorModel,
    thetas: &[f64],
    opts: &CollapseOptions,
) -> Result<EnsembleSummary, DynamicsError> {
    if thetas.is_empty() {
        return Err(DynamicsError::BadInput("empty orientation grid".into()));
    }
    let outcomes = thetas
        .iter()
        .map(|&th| collapse_run(&params.clone().with_theta0(th), opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = outcomes.iter().map(|o| o.final_op).sum::<C64>() / thetas.len() as f64;
    Ok(EnsembleSummary { thetas: thetas.to_vec(), outcomes, mean_final_op: mean })
}
