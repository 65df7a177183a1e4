mod common;

use mie_pseudomode::ode::Tolerance;
use mie_pseudomode::oracle::*;

#[test]
fn kernel_integral_equals_pole_sum_after_the_transient() {
    let (c, _) = common::model(10.0);
    let a = c.resonator.radius;
    for l in [5, 8] {
        let k = KernelIntegrator::new(&c.resonator, l, KernelOptions::default()).unwrap();
        for tau in [5.0, 20.0] {
            let q = k.quadrature(a, a, tau).unwrap();
            let s = k.residue_sum(a, a, tau).unwrap();
            assert!((q.value - s).norm() < 1e-3 * s.norm(), "l = {l}, tau = {tau}: {} vs {s}", q.value);
        }
    }
}

#[test]
fn weight_is_odd_on_the_real_axis() {
    let (c, _) = common::model(10.0);
    let a = c.resonator.radius;
    let k = KernelIntegrator::new(&c.resonator, 5, KernelOptions::default()).unwrap();
    for tau in [1.0, 5.0] {
        let (half, full) = k.half_line_check(a, 1.7, tau, 40.0).unwrap();
        assert!((2.0 * half - full).norm() < 1e-6 * full.norm(), "tau = {tau}: {half} vs {full}");
    }
}

#[test]
fn residue_sum_is_causal() {
    let (c, _) = common::model(10.0);
    let a = c.resonator.radius;
    let k = KernelIntegrator::new(&c.resonator, 8, KernelOptions::default()).unwrap();
    for tau in [0.5, 1.0, 1.999] {
        assert_eq!(k.residue_sum(a + 2.0, a, tau).unwrap().norm(), 0.0);
    }
    assert!(k.residue_sum(a + 2.0, a, 2.5).unwrap().norm() > 0.0);
}

#[test]
fn box_resonance_carries_the_pseudomode_weight() {
    let (c, m) = common::model(10.0);
    let b = discretize_box(&c.resonator, &m.set.emitter, 8, 200.0, 5.0).unwrap();
    let pm = &m.set.modes[m.set.index_of(8, 3).unwrap()];
    let (centre, width) = (pm.pole.z.re, pm.pole.gamma().max(std::f64::consts::PI / 200.0));
    let weight: f64 = b.k_modes.iter().zip(&b.g_modes).filter(|(&k, _)| (k - centre).abs() < 5.0 * width).map(|(_, &g)| g * g).sum();
    let target = pm.gbar.norm_sqr();
    assert!((weight / target - 1.0).abs() < 1e-3, "{weight} vs {target}");
}

#[test]
fn box_roots_are_converged() {
    let (c, m) = common::model(10.0);
    let b = discretize_box(&c.resonator, &m.set.emitter, 3, 200.0, 10.0).unwrap();
    assert!(b.residuals.iter().all(|&r| r < 1e-10));
    assert!(b.k_modes.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn oracle_converges_in_box_radius_and_conserves_probability() {
    let (_, m) = common::model(10.0);
    let t: Vec<f64> = (0..=60).map(|i| 150.0 * i as f64 / 60.0).collect();
    let run = |r_box: f64| {
        let boxes = discretize_all(&m.set.resonator, &m.set.emitter, 10, r_box, 10.0).unwrap();
        oracle_evolve(m.set.emitter.omega0, &boxes, &t, Tolerance::default()).unwrap()
    };
    let (small, large) = (run(100.0), run(200.0));
    assert!(small.max_probability_error() < 1e-8, "{}", small.max_probability_error());
    assert!(large.max_probability_error() < 1e-8, "{}", large.max_probability_error());
    let err = max_relative_error(&small.c0, &large.c0);
    assert!(err < 1e-4, "{err}");
}
