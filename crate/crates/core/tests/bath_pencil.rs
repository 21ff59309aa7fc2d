use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use suvsim_core::bath::{cat_lion_demo, coherence_closed_form, decohere_run, CompositeSystem, SystemSpec};
use suvsim_core::pencil::{critical_angle, simulate_fall, PencilParams};

#[test]
fn dephasing_conserves_symmetry_and_pointers() {
    let spec = CompositeSystem::two_level(8, 0.3);
    let s = decohere_run(&spec, 20.0, 200).unwrap();
    let (p0, m0) = (s.population_plus[0], s.population_minus[0]);
    for k in 0..s.times.len() {
        assert!(s.symmetry_expectation[k].abs() < 1e-12);
        assert!((s.population_plus[k] - p0).abs() < 1e-12);
        assert!((s.population_minus[k] - m0).abs() < 1e-12);
        assert!((s.coherence[k] - coherence_closed_form(0.3, 8, s.times[k])).abs() < 1e-8);
        assert!((s.purity_full[k] - 1.0).abs() < 1e-10);
        let rho = &s.reduced[k];
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.eigenvalues().unwrap().iter().all(|&l| l > -1e-12));
    }
    // Coherence is lost early and comes back at the recurrence t = π/(2g).
    let at = |t0: f64| s.coherence[s.times.iter().position(|&t| t >= t0).unwrap()];
    assert!(at(2.0) < 1e-3);
    assert!(at(std::f64::consts::PI / 0.6) > 0.99);
}

#[test]
fn spin_system_keeps_full_symmetry() {
    let spec = CompositeSystem { system: SystemSpec::Spins { n: 2, p: 0.7 }, bath_qubits: 4, coupling: 0.2, frequencies: vec![] };
    let s = decohere_run(&spec, 10.0, 50).unwrap();
    for k in 0..s.times.len() {
        assert!(s.symmetry_expectation[k].abs() < 1e-12);
        assert!((s.purity_full[k] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn cat_and_lion_entangle_but_stay_pure() {
    let r = cat_lion_demo(&CompositeSystem::two_level(1, 0.5)).unwrap();
    assert!((r.purity_full - 1.0).abs() < 1e-10);
    assert!((r.purity_system - 0.5).abs() < 1e-10);
    assert!((r.entropy_system - std::f64::consts::LN_2).abs() < 1e-10);
    assert!(r.symmetry_after.abs() < 1e-12);
}

#[test]
fn pencil_outcome_is_the_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 1000 {
        let b = rng.gen_range(0.0..0.5);
        let h = rng.gen_range(0.5..2.0);
        let phi0 = rng.gen_range(0.0..1.2);
        let crit = critical_angle(b, h);
        if (phi0 - crit).abs() < 1e-6 {
            continue;
        }
        let out = simulate_fall(&PencilParams::new(b, h, phi0)).unwrap().final_ratio;
        assert_eq!(out, if phi0 > crit { 1.0 } else { 0.0 }, "b={b} h={h} φ₀={phi0}");
        checked += 1;
    }
}

#[test]
fn pencil_outcome_rises_with_tilt() {
    for &b in &[1e-3, 0.05, 0.3] {
        let mut last = 0.0;
        for k in 1..60 {
            let phi0 = k as f64 * 0.02;
            let r = simulate_fall(&PencilParams::new(b, 1.0, phi0)).unwrap().final_ratio;
            assert!(r >= last);
            last = r;
        }
    }
}

#[test]
fn pencil_falls_along_its_tilt() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let az = rng.gen_range(-3.1..3.1);
        let p = PencilParams { azimuth: az, ..PencilParams::new(0.01, 1.0, 0.3) };
        assert_eq!(simulate_fall(&p).unwrap().azimuth, az);
    }
}
