use std::f64::consts::FRAC_PI_2;

use suvsim_core::dynamics::{
    collapse_run, collapse_time, evolve, reorientation_time, CollapseOptions, EvolveOptions, GeneratorSpec,
    ReorientOptions,
};
use suvsim_core::fit::fit_line;
use suvsim_core::models::{build_rotor, symmetric_state, wavepacket_state, RotorModel};

fn quick() -> CollapseOptions {
    CollapseOptions { sample_spacing: 1e-2, ..Default::default() }
}

#[test]
fn collapse_time_scales_inversely() {
    let t = |n: f64, e: f64| collapse_time(&RotorModel::new(n, 60, 0.0).with_epsilon(e), &quick()).unwrap();
    let base = t(100.0, 1e-2);
    assert!((t(100.0, 2e-2) / base - 0.5).abs() < 0.5 * 0.05);
    assert!((t(200.0, 1e-2) / base - 0.5).abs() < 0.5 * 0.1);
}

#[test]
fn unitary_rotor_conserves_norm_and_energy() {
    // Symmetric start, then an ordered packet in a field.
    let cases = [(RotorModel::new(50.0, 40, 0.0), None), (RotorModel::new(50.0, 60, 1e-2), Some(0.7))];
    for (p, packet) in cases {
        let model = build_rotor(&p).unwrap();
        let start = match packet {
            None => wavepacket_state(&RotorModel { field: 1e-2, ..p.clone() }, 0.4).unwrap(),
            Some(th) => wavepacket_state(&p, th).unwrap(),
        };
        let gen = GeneratorSpec::unitary(model.hamiltonian.clone()).unwrap();
        let tr = evolve(&start, &gen, &model.order_parameter, 1e3, 10.0, &EvolveOptions::default()).unwrap();
        let e0 = tr.energy[0];
        for (e, l) in tr.energy.iter().zip(&tr.log_norm) {
            assert!((e - e0).abs() < 1e-8, "energy drift {}", e - e0);
            assert!(l.abs() < 1e-8, "norm drift {l}");
        }
        assert!(symmetric_state(&model).is_ok() || packet.is_some());
    }
}

#[test]
fn collapse_energy_drift_shrinks_with_size() {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &[50.0, 100.0, 200.0] {
        let out = collapse_run(&RotorModel::new(n, 60, 0.0).with_epsilon(1e-2), &quick()).unwrap();
        let tr = &out.trajectory;
        // Read at a fixed multiple of t_c; the late steady state has its own
        // N-independent kinetic energy.
        let t_read = 4.0 * out.t_c.unwrap();
        let k = tr.times.iter().position(|&t| t >= t_read).unwrap();
        let drift = (tr.energy[k] - tr.energy[0]).abs();
        xs.push(f64::ln(n));
        ys.push(drift.ln());
    }
    let fit = fit_line(&xs, &ys).unwrap();
    assert!((fit.slope + 1.0).abs() < 0.1, "drift ∝ N^{}", fit.slope);
}

#[test]
fn collapse_is_monotone_after_last_zero() {
    let out = collapse_run(&RotorModel::new(100.0, 60, 0.0).with_epsilon(1e-2).with_theta0(1.1), &CollapseOptions::default()).unwrap();
    let op = &out.trajectory.op_modulus;
    let start = op.iter().rposition(|&v| v == 0.0).unwrap_or(0);
    for w in op[start..].windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "{} -> {} (start {start}, zeros {:?})", w[0], w[1], &op[..start.min(5) + 1]);
    }
}

#[test]
fn limits_do_not_commute_at_grid_corners() {
    // Large N with weak ε collapses before small N with strong ε reorients.
    let tc = collapse_time(&RotorModel::new(400.0, 60, 0.0).with_epsilon(1e-3), &quick()).unwrap();
    let tr = reorientation_time(
        &RotorModel::new(50.0, 80, 1e-2).with_epsilon(1e-1),
        0.0,
        FRAC_PI_2,
        &ReorientOptions::default(),
    )
    .unwrap();
    assert!(tc < tr, "t_c = {tc}, t_r = {tr}");
}

#[test]
fn tighter_tolerance_changes_little() {
    let p = RotorModel::new(100.0, 60, 0.0).with_epsilon(1e-2);
    let a = collapse_run(&p, &quick()).unwrap();
    let b = collapse_run(&p, &CollapseOptions { tolerance: 1e-10, ..quick() }).unwrap();
    assert!((a.final_op.norm() - b.final_op.norm()).abs() < 1e-6);
}

#[test]
fn verification_rerun_passes() {
    let p = RotorModel::new(50.0, 40, 0.0).with_epsilon(1e-2);
    let m = build_rotor(&p).unwrap();
    let gen = GeneratorSpec::new(m.hamiltonian.clone(), 1e-2, m.breaking_field.clone()).unwrap();
    let s = symmetric_state(&m).unwrap();
    let opts = EvolveOptions { verify: true, ..Default::default() };
    let tr = evolve(&s, &gen, &m.order_parameter, 5.0, 0.5, &opts).unwrap();
    assert!(tr.verification_error.unwrap() < 1e-6);
}
