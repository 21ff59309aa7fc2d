use suvsim_core::equilibrium::{
    cutoff_converge, harmonic_oracle, limit_scan, order_parameter_eq, perturbative_oracle, tower_spectrum,
};
use suvsim_core::linalg::{expectation_normalized, ground_state};
use suvsim_core::models::{build_rotor, build_tfim, wavepacket_state, RotorModel, TfimModel};
use suvsim_core::C64;

#[test]
fn rotor_commutes_with_lz_only_without_field() {
    let free = build_rotor(&RotorModel::new(30.0, 20, 0.0)).unwrap();
    assert_eq!(free.hamiltonian.commutator_norm(&free.symmetry_generator).unwrap(), 0.0);
    let broken = build_rotor(&RotorModel::new(30.0, 20, 0.1)).unwrap();
    assert!(broken.hamiltonian.commutator_norm(&broken.symmetry_generator).unwrap() > 1e-3);
}

#[test]
fn shift_relation_with_truncated_top() {
    let m = build_rotor(&RotorModel::new(10.0, 6, 0.0)).unwrap();
    let basis = m.hamiltonian.basis().clone();
    for mm in -6i64..=6 {
        let i = basis.lz_index(mm).unwrap();
        let mut e = vec![C64::new(0.0, 0.0); m.dim()];
        e[i] = C64::new(1.0, 0.0);
        let out = m.order_parameter.apply(&e).unwrap();
        if mm < 6 {
            let j = basis.lz_index(mm + 1).unwrap();
            assert_eq!(out[j], C64::new(1.0, 0.0));
            assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
        } else {
            assert!(out.iter().all(|z| z.norm() == 0.0));
        }
    }
}

#[test]
fn tfim_parity_commutes_on_eleven_points() {
    for k in 0..=10 {
        let model = build_tfim(&TfimModel::new(6, k as f64 / 10.0)).unwrap();
        assert!(model.hamiltonian.commutator_norm(&model.symmetry_generator).unwrap() < 1e-12);
    }
}

#[test]
fn wavepacket_overlap_is_gaussian() {
    for &n in &[50.0, 200.0] {
        let p = RotorModel::new(n, 200, 1e-2);
        let s2 = p.packet_variance();
        let sigma_theta = 1.0 / (2.0 * s2.sqrt());
        let a = wavepacket_state(&p, 0.3).unwrap();
        for k in 1..=6 {
            let delta = k as f64 * 0.5 * sigma_theta;
            let b = wavepacket_state(&p, 0.3 + delta).unwrap();
            let got = a.inner(&b).unwrap().norm();
            let want = (-s2 * delta * delta / 2.0).exp();
            assert!((got / want - 1.0).abs() < 0.05, "N={n} δ={delta}: {got} vs {want}");
        }
    }
}

#[test]
fn limit_orders_on_the_rotor() {
    // Field first: large N at fixed B orders; symmetric first: B → 0 kills it.
    let ns = [1e2, 1e3, 1e4];
    let bs = [1e-8, 1e-5, 1e-3];
    let scan = limit_scan(&ns, &bs, 0.0).unwrap();
    for p in &scan.points {
        assert!(p.converged, "{p:?}");
    }
    assert!(scan.get(1e4, 1e-3).unwrap().op_modulus > 0.97);
    assert!(scan.get(1e2, 1e-8).unwrap().op_modulus < 0.01);
    assert!(scan.monotonicity_violations(1e-8).is_empty());
    for p in &scan.points {
        if 4.0 * p.n * p.b.sqrt() > 10.0 {
            assert!((p.op_modulus - harmonic_oracle(p.n, p.b)).abs() < 0.02, "{p:?}");
        }
        if p.n * p.n * p.b < 1e-3 {
            let want = perturbative_oracle(p.n, p.b);
            assert!((p.op_modulus / want - 1.0).abs() < 0.2, "{p:?} {want}");
        }
    }
}

#[test]
fn ground_energy_falls_as_cutoff_doubles() {
    let mut last = f64::INFINITY;
    for m in [4usize, 8, 16, 32, 64] {
        let model = build_rotor(&RotorModel::new(100.0, m, 1e-2)).unwrap();
        let (e, _) = ground_state(&model.hamiltonian).unwrap();
        assert!(e <= last + 1e-14);
        last = e;
    }
}

#[test]
fn order_parameter_ignores_field_direction() {
    for &(n, b) in &[(100.0, 1e-3), (1e3, 1e-4), (50.0, 1e-1)] {
        let c = cutoff_converge(&RotorModel::new(n, 4, b)).unwrap().cutoff;
        let at = |th: f64| order_parameter_eq(&build_rotor(&RotorModel::new(n, c, b).with_theta0(th)).unwrap()).unwrap();
        let base = at(0.0);
        for th in [0.5, 2.0, -2.9] {
            assert!((at(th) - base).abs() < 1e-10);
        }
    }
}

#[test]
fn tower_gaps_halve_with_size() {
    let g = |n: f64| tower_spectrum(&build_rotor(&RotorModel::new(n, 10, 0.0)).unwrap(), 4).unwrap().gaps();
    let (a, b) = (g(40.0), g(80.0));
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        let m = (k + 1) as f64;
        assert!((x - m * m / 80.0).abs() < 1e-12);
        assert!((x / 2.0 - y).abs() < 1e-12);
    }
}

#[test]
fn symmetric_ground_state_has_no_order() {
    let model = build_rotor(&RotorModel::new(100.0, 20, 0.0)).unwrap();
    let (_, gs) = ground_state(&model.hamiltonian).unwrap();
    assert_eq!(expectation_normalized(&gs, &model.order_parameter).unwrap().norm(), 0.0);
}
