//! One runner per experiment kind. Each sweeps its grid, writes its tables
//! and returns a record per grid point.

use anyhow::Result;
use serde::Serialize;
use suvsim_core::bath::{cat_lion_demo, coherence_closed_form, decohere_run, SystemSpec};
use suvsim_core::dynamics::{
    collapse_run, quench_sweep, reorientation_run, CollapseOptions, CollapseOutcome, DynamicsError, QuenchSpec,
    RampSchedule, ReorientOptions, ReorientOutcome, Trajectory,
};
use suvsim_core::equilibrium::{limit_scan_point, LimitScanPoint};
use suvsim_core::fit::{fit_timescales, TimescaleFit, TimescalePoint};
use suvsim_core::models::{RotorModel, TfimModel};
use suvsim_core::pencil::{critical_angle, simulate_fall, PencilParams};

use crate::config::{
    BathParams, CollapseParams, EquilibriumParams, IntegratorConfig, PencilConfig, QuenchParams, ReorientParams,
    RunConfig,
};
use crate::output::{fmt_f64, fmt_opt, OutputDir, RunRecord, RunStatus};
use crate::sweep::{sweep_execute, PointResult};

/// Largest cutoff the window-widening retry will try.
pub const MAX_AUTO_CUTOFF: usize = 4096;

/// Calls `f` with `start`, doubling the cutoff each time the packet leaks
/// out of the window.
pub fn widen_cutoff<T>(
    start: usize,
    mut f: impl FnMut(usize) -> Result<T, DynamicsError>,
) -> Result<(T, usize), DynamicsError> {
    let mut c = start;
    loop {
        match f(c) {
            Err(DynamicsError::PacketLeftWindow { .. }) if 2 * c <= MAX_AUTO_CUTOFF => c *= 2,
            other => return other.map(|t| (t, c)),
        }
    }
}

fn record(key: &[f64], label: String, error: Option<String>) -> RunRecord {
    RunRecord {
        key: key.to_vec(),
        label,
        status: if error.is_some() { RunStatus::Failed } else { RunStatus::Ok },
        error,
    }
}

fn grid2(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect()
}

const TRAJECTORY_HEADER: [&str; 5] = ["t", "op_modulus", "op_phase", "energy", "log_norm"];

fn trajectory_rows(tr: &Trajectory) -> Vec<Vec<String>> {
    (0..tr.times.len())
        .map(|k| {
            vec![
                fmt_f64(tr.times[k]),
                fmt_f64(tr.op_modulus[k]),
                fmt_f64(tr.op_phase[k]),
                fmt_f64(tr.energy[k]),
                fmt_f64(tr.log_norm[k]),
            ]
        })
        .collect()
}

pub fn equilibrium(cfg: &RunConfig, p: &EquilibriumParams, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let theta0 = p.theta0;
    let results = sweep_execute(grid2(&p.n_grid, &p.b_grid), cfg.workers, cfg.seed, |k| {
        Ok::<LimitScanPoint, String>(limit_scan_point(k[0], k[1], theta0))
    });
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut points = Vec::new();
    for r in &results {
        let label = format!("N={} B={}", r.key[0], r.key[1]);
        match &r.outcome {
            Ok(pt) => {
                rows.push(vec![
                    fmt_f64(pt.n),
                    fmt_f64(pt.b),
                    pt.cutoff.to_string(),
                    fmt_f64(pt.op_modulus),
                    pt.converged.to_string(),
                ]);
                let err = (!pt.converged).then(|| pt.error.clone().unwrap_or_else(|| "not converged".into()));
                records.push(record(&r.key, label, err));
                points.push(pt.clone());
            }
            Err(e) => {
                rows.push(vec![fmt_f64(r.key[0]), fmt_f64(r.key[1]), "0".into(), "NaN".into(), "false".into()]);
                records.push(record(&r.key, label, Some(e.clone())));
            }
        }
    }
    out.write_csv("limit_scan.csv", &["N", "B", "cutoff", "op_modulus", "converged"], &rows)?;

    #[derive(Serialize)]
    struct Summary {
        n_max: f64,
        b_min: f64,
        b_max: f64,
        /// B → 0 at the largest N.
        op_at_b_min: Option<f64>,
        /// N → ∞ at the largest B.
        op_at_b_max: Option<f64>,
    }
    let n_max = *p.n_grid.last().unwrap();
    let find = |b: f64| points.iter().find(|q| q.n == n_max && q.b == b).map(|q| q.op_modulus);
    let b_min = p.b_grid[0];
    let b_max = *p.b_grid.last().unwrap();
    out.write_json(
        "limit_summary.json",
        &Summary { n_max, b_min, b_max, op_at_b_min: find(b_min), op_at_b_max: find(b_max) },
    )?;
    Ok(records)
}

#[derive(Clone, Debug)]
pub struct CollapsePoint {
    pub outcome: CollapseOutcome,
    pub cutoff: usize,
    pub verification_error: Option<f64>,
}

pub fn collapse_options(p: &CollapseParams, integ: &IntegratorConfig) -> CollapseOptions {
    CollapseOptions {
        gamma: p.gamma,
        tolerance: integ.tolerance,
        sample_spacing: p.sample_spacing,
        budget: p.budget,
        ..Default::default()
    }
}

/// One collapse run with automatic window widening and optional
/// tightened-tolerance check of the final order parameter.
pub fn collapse_point(
    n: f64,
    eps: f64,
    p: &CollapseParams,
    integ: &IntegratorConfig,
) -> Result<CollapsePoint, DynamicsError> {
    let opts = collapse_options(p, integ);
    let params = |c: usize| RotorModel::new(n, c, p.field).with_epsilon(eps).with_theta0(p.theta0);
    let (outcome, cutoff) = widen_cutoff(p.cutoff, |c| collapse_run(&params(c), &opts))?;
    let verification_error = if integ.verify {
        let tight = CollapseOptions { tolerance: opts.tolerance / 10.0, ..opts };
        let twin = collapse_run(&params(cutoff), &tight)?;
        let err = (twin.final_op - outcome.final_op).norm();
        if err > suvsim_core::dynamics::VERIFY_LIMIT {
            return Err(DynamicsError::VerificationFailed(err));
        }
        Some(err)
    } else {
        None
    };
    Ok(CollapsePoint { outcome, cutoff, verification_error })
}

#[derive(Serialize)]
struct GammaFit {
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<TimescaleFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FitReport {
    primary_gamma: f64,
    fits: Vec<GammaFit>,
}

fn fit_or_error(points: Vec<TimescalePoint>) -> (Option<TimescaleFit>, Option<String>) {
    match fit_timescales(&points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

pub fn collapse(cfg: &RunConfig, p: &CollapseParams, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let integ = cfg.integrator;
    let results: Vec<PointResult<CollapsePoint>> =
        sweep_execute(grid2(&p.n_grid, &p.epsilon_grid), cfg.workers, cfg.seed, |k| {
            collapse_point(k[0], k[1], p, &integ).map_err(|e| e.to_string())
        });
    let mut gammas = vec![p.gamma];
    for g in &p.gammas {
        if !gammas.contains(g) {
            gammas.push(*g);
        }
    }
    let mut rows = Vec::new();
    let mut thresholds = Vec::new();
    let mut records = Vec::new();
    let mut by_gamma: Vec<Vec<TimescalePoint>> = vec![Vec::new(); gammas.len()];
    for r in &results {
        let (n, eps) = (r.key[0], r.key[1]);
        let label = format!("N={n} eps={eps}");
        match &r.outcome {
            Ok(pt) => {
                let o = &pt.outcome;
                out.write_csv(
                    &format!("trajectories/collapse_N{n}_eps{eps}.csv"),
                    &TRAJECTORY_HEADER,
                    &trajectory_rows(&o.trajectory),
                )?;
                let err = o.t_c.is_none().then(|| {
                    format!("threshold {} never reached by t = {} (last {})", p.gamma, o.t_end, o.final_op.norm())
                });
                rows.push(vec![
                    fmt_f64(n),
                    fmt_f64(eps),
                    pt.cutoff.to_string(),
                    fmt_f64(p.gamma),
                    fmt_opt(o.t_c),
                    o.steady.to_string(),
                    fmt_f64(o.t_end),
                    fmt_f64(o.final_op.norm()),
                    fmt_opt(pt.verification_error),
                    if err.is_some() { "failed" } else { "ok" }.into(),
                ]);
                for (gi, &g) in gammas.iter().enumerate() {
                    let t = o.crossing(g);
                    thresholds.push(vec![fmt_f64(n), fmt_f64(eps), fmt_f64(g), fmt_opt(t)]);
                    if let Some(t) = t.filter(|_| eps > 0.0) {
                        by_gamma[gi].push(TimescalePoint { epsilon: eps, n, time: t });
                    }
                }
                records.push(record(&r.key, label, err));
            }
            Err(e) => {
                rows.push(vec![
                    fmt_f64(n),
                    fmt_f64(eps),
                    String::new(),
                    fmt_f64(p.gamma),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "failed".into(),
                ]);
                records.push(record(&r.key, label, Some(e.clone())));
            }
        }
    }
    out.write_csv(
        "collapse_times.csv",
        &["N", "epsilon", "cutoff", "gamma", "t_c", "steady", "t_end", "final_op_modulus", "verification_error", "status"],
        &rows,
    )?;
    out.write_csv("collapse_thresholds.csv", &["N", "epsilon", "gamma", "t_c"], &thresholds)?;
    let fits = gammas
        .iter()
        .zip(by_gamma)
        .map(|(&gamma, pts)| {
            let (fit, error) = fit_or_error(pts);
            GammaFit { gamma, fit, error }
        })
        .collect();
    out.write_json("timescale_fit.json", &FitReport { primary_gamma: p.gamma, fits })?;
    Ok(records)
}

#[derive(Clone, Debug)]
pub struct ReorientPoint {
    pub outcome: ReorientOutcome,
    pub cutoff: usize,
}

pub fn reorient_point(n: f64, eps: f64, p: &ReorientParams, integ: &IntegratorConfig) -> Result<ReorientPoint, DynamicsError> {
    let opts = ReorientOptions {
        angle_tolerance: p.angle_tolerance,
        tolerance: integ.tolerance,
        budget: p.budget,
        ..Default::default()
    };
    let base = RotorModel::new(n, 4, p.field).with_epsilon(eps);
    let start = p.cutoff.max(base.packet_cutoff());
    let (outcome, cutoff) = widen_cutoff(start, |c| {
        reorientation_run(&base.clone().with_cutoff(c), p.theta_start, p.theta_field, &opts)
    })?;
    Ok(ReorientPoint { outcome, cutoff })
}

pub fn reorient(cfg: &RunConfig, p: &ReorientParams, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let integ = cfg.integrator;
    let results = sweep_execute(grid2(&p.n_grid, &p.epsilon_grid), cfg.workers, cfg.seed, |k| {
        reorient_point(k[0], k[1], p, &integ).map_err(|e| e.to_string())
    });
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut pts = Vec::new();
    for r in &results {
        let (n, eps) = (r.key[0], r.key[1]);
        let label = format!("N={n} eps={eps}");
        match &r.outcome {
            Ok(pt) => {
                let o = &pt.outcome;
                out.write_csv(
                    &format!("trajectories/reorient_N{n}_eps{eps}.csv"),
                    &TRAJECTORY_HEADER,
                    &trajectory_rows(&o.trajectory),
                )?;
                let err = o.t_r.is_none().then(|| format!("not within {} rad of the field by the budget", p.angle_tolerance));
                if let Some(t) = o.t_r.filter(|&t| t > 0.0) {
                    pts.push(TimescalePoint { epsilon: eps, n, time: t });
                }
                rows.push(vec![
                    fmt_f64(n),
                    fmt_f64(eps),
                    pt.cutoff.to_string(),
                    fmt_opt(o.t_r),
                    fmt_f64(o.max_edge_weight),
                    if err.is_some() { "failed" } else { "ok" }.into(),
                ]);
                records.push(record(&r.key, label, err));
            }
            Err(e) => {
                rows.push(vec![fmt_f64(n), fmt_f64(eps), String::new(), String::new(), String::new(), "failed".into()]);
                records.push(record(&r.key, label, Some(e.clone())));
            }
        }
    }
    out.write_csv("reorient_times.csv", &["N", "epsilon", "cutoff", "t_r", "max_edge_weight", "status"], &rows)?;
    let (fit, error) = fit_or_error(pts);
    #[derive(Serialize)]
    struct Report {
        #[serde(skip_serializing_if = "Option::is_none")]
        fit: Option<TimescaleFit>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    }
    out.write_json("timescale_fit.json", &Report { fit, error })?;
    Ok(records)
}

pub fn quench_spec(p: &QuenchParams, eps: f64, sign: f64) -> QuenchSpec {
    let schedule = match &p.knots {
        Some(k) => RampSchedule { knots: k.clone() },
        None => RampSchedule::linear(p.total_time),
    };
    QuenchSpec {
        model: TfimModel { open_boundary: p.open_boundary, ..TfimModel::new(p.spins, 0.0) },
        schedule,
        epsilon: eps,
        field_sign: sign,
        record_every: p.record_every,
    }
}

pub fn quench(cfg: &RunConfig, p: &QuenchParams, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let results = sweep_execute(grid2(&p.epsilon_grid, &p.field_signs), cfg.workers, cfg.seed, |k| {
        quench_sweep(&quench_spec(p, k[0], k[1])).map_err(|e| e.to_string())
    });
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for r in &results {
        let (eps, sign) = (r.key[0], r.key[1]);
        let label = format!("eps={eps} sign={sign}");
        match &r.outcome {
            Ok(tr) => {
                let sched = quench_spec(p, eps, sign).schedule;
                let body: Vec<Vec<String>> = (0..tr.times.len())
                    .map(|k| {
                        vec![
                            fmt_f64(tr.times[k]),
                            fmt_f64(sched.p(tr.times[k])),
                            fmt_f64(tr.op_real[k]),
                            fmt_f64(tr.op_modulus[k]),
                            fmt_f64(tr.energy[k]),
                            fmt_f64(tr.log_norm[k]),
                        ]
                    })
                    .collect();
                out.write_csv(
                    &format!("trajectories/quench_eps{eps}_sign{sign}.csv"),
                    &["t", "p", "m_x", "op_modulus", "energy", "log_norm"],
                    &body,
                )?;
                let max_abs = tr.op_modulus.iter().fold(0.0f64, |m, &v| m.max(v));
                rows.push(vec![
                    fmt_f64(eps),
                    fmt_f64(sign),
                    fmt_f64(max_abs),
                    fmt_f64(*tr.op_real.last().unwrap()),
                    "ok".into(),
                ]);
                records.push(record(&r.key, label, None));
            }
            Err(e) => {
                rows.push(vec![fmt_f64(eps), fmt_f64(sign), String::new(), String::new(), "failed".into()]);
                records.push(record(&r.key, label, Some(e.clone())));
            }
        }
    }
    out.write_csv("quench_summary.csv", &["epsilon", "field_sign", "max_abs_m_x", "final_m_x", "status"], &rows)?;
    Ok(records)
}

pub fn bath(_cfg: &RunConfig, p: &BathParams, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let spec = p.composite();
    let key = vec![p.bath_qubits as f64, p.coupling];
    let label = format!("K={} g={}", p.bath_qubits, p.coupling);
    let series = match decohere_run(&spec, p.t_final, p.samples) {
        Ok(s) => s,
        Err(e) => return Ok(vec![record(&key, label, Some(e.to_string()))]),
    };
    // The product-of-cosines form holds for the bare two-level system.
    let closed = spec.system == SystemSpec::TwoLevel && spec.frequencies.iter().all(|&w| w == 0.0);
    let rows: Vec<Vec<String>> = (0..series.times.len())
        .map(|k| {
            let t = series.times[k];
            vec![
                fmt_f64(t),
                fmt_f64(series.purity_reduced[k]),
                fmt_f64(series.coherence[k]),
                fmt_f64(series.population_plus[k]),
                fmt_f64(series.symmetry_expectation[k]),
                fmt_f64(series.population_minus[k]),
                fmt_f64(series.purity_full[k]),
                if closed { fmt_f64(coherence_closed_form(p.coupling, p.bath_qubits, t)) } else { String::new() },
            ]
        })
        .collect();
    out.write_csv(
        "decoherence.csv",
        &[
            "t",
            "purity_reduced",
            "coherence",
            "population_plus",
            "symmetry_expectation",
            "population_minus",
            "purity_full",
            "coherence_closed_form",
        ],
        &rows,
    )?;
    if p.bath_qubits == 1 && p.coupling != 0.0 {
        match cat_lion_demo(&spec) {
            Ok(r) => out.write_json("cat_lion.json", &r)?,
            Err(e) => return Ok(vec![record(&key, label, Some(e.to_string()))]),
        }
    }
    Ok(vec![record(&key, label, None)])
}

pub fn pencil(cfg: &RunConfig, p: &PencilConfig, out: &mut OutputDir) -> Result<Vec<RunRecord>> {
    let results = sweep_execute(grid2(&p.b_grid, &p.phi0_grid), cfg.workers, cfg.seed, |k| {
        simulate_fall(&PencilParams::new(k[0], 1.0, k[1])).map(|f| f.final_ratio).map_err(|e| e.to_string())
    });
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let lookup = |b: f64, phi: f64| {
        results.iter().find(|r| r.key[0] == b && r.key[1] == phi).and_then(|r| r.outcome.as_ref().ok().copied())
    };
    for r in &results {
        let label = format!("b={} phi0={}", r.key[0], r.key[1]);
        rows.push(vec![fmt_f64(r.key[0]), fmt_f64(r.key[1]), r.outcome.as_ref().map_or(String::new(), |v| fmt_f64(*v))]);
        records.push(record(&r.key, label, r.outcome.as_ref().err().cloned()));
    }
    out.write_csv("pencil.csv", &["b", "phi0", "final_ratio"], &rows)?;

    #[derive(Serialize)]
    struct Limits {
        /// Inner limit φ₀ → 0 at each b (value at the smallest φ₀), b descending.
        phi0_first_sequence: Vec<Option<f64>>,
        /// Inner limit b → 0 at each φ₀ (value at the smallest b), φ₀ descending.
        b_first_sequence: Vec<Option<f64>>,
        /// Both orders end on the same corner of one rectangular table, so
        /// each is only meaningful when its inner grid runs deeper.
        phi0_first_resolved: bool,
        b_first_resolved: bool,
    }
    let (b_min, phi_min) = (*p.b_grid.last().unwrap(), *p.phi0_grid.last().unwrap());
    out.write_json(
        "pencil_limits.json",
        &Limits {
            phi0_first_sequence: p.b_grid.iter().map(|&b| lookup(b, phi_min)).collect(),
            b_first_sequence: p.phi0_grid.iter().map(|&f| lookup(b_min, f)).collect(),
            phi0_first_resolved: phi_min < critical_angle(b_min, 1.0),
            b_first_resolved: b_min < phi_min.tan(),
        },
    )?;
    Ok(records)
}
