mod common;

use mie_pseudomode::dynamics::*;
use mie_pseudomode::ode::Tolerance;
use num_complex::Complex64;

fn max_gain(p: &Propagator) -> f64 {
    p.eigenvalues.iter().map(|l| l.im).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn eigendecomposition_reproduces_the_generator() {
    let (_, m) = common::model(10.0);
    let p = Propagator::new(&assemble_generator(&m.set)).unwrap();
    assert_eq!(p.dim(), 614);
    assert!(p.residual < 1e-12, "{}", p.residual);
    assert!(p.condition < CONDITION_LIMIT);
}

#[test]
fn spectrum_is_invariant_under_pole_reordering() {
    let (_, m) = common::model(10.0);
    let gen = assemble_generator(&m.set);
    let mut rev = gen.clone();
    rev.poles.reverse();
    rev.couplings.reverse();
    rev.labels.reverse();
    let sorted = |g: &EffectiveGenerator| {
        let mut e = Propagator::new(g).unwrap().eigenvalues;
        e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        e
    };
    for (a, b) in sorted(&gen).iter().zip(sorted(&rev)) {
        assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn ode_fallback_matches_eigen_path() {
    let (_, m) = common::model(100.0);
    let gen = assemble_generator(&m.set);
    let keep: Vec<ModeLabel> = gen.labels.iter().copied().filter(|&(l, _)| (4..=9).contains(&l)).collect();
    let small = gen.restricted(&keep, gen.omega0);
    let t = linear_time_grid(500.0, 50);
    let exact = evolve(&small, &t).unwrap();
    let ode = evolve_ode(&small, &t, exact.condition, Tolerance { rtol: 1e-12, atol: 1e-12 }).unwrap();
    assert_eq!(ode.path, SolverPath::Ode);
    for k in 0..t.len() {
        assert!((exact.c0[k] - ode.c0[k]).norm() < 1e-8, "t = {}", t[k]);
        for i in 0..exact.b.len() {
            let (a, b) = (exact.b[i][k], ode.b[i][k]);
            assert!((a - b).norm() < 1e-8, "{:?} t = {}: {a} vs {b}", exact.labels[i], t[k]);
        }
    }
}

#[test]
fn reduced_model_keeping_every_mode_is_the_full_model() {
    let (c, m) = common::model(10.0);
    let labels: Vec<ModeLabel> = m.set.modes.iter().map(|x| (x.pole.l, x.pole.n)).collect();
    let t = linear_time_grid(2e5, 200);
    let full = evolve(&assemble_generator(&m.set), &t).unwrap();
    let reduced = two_mode_approx(&m.set, &labels, &t, c.dynamics.lamb_convention).unwrap();
    for k in 0..t.len() {
        assert!((full.c0[k] - reduced.c0[k]).norm() < 1e-12);
    }
}

#[test]
fn tuning_puts_the_shifted_frequency_on_the_resonance() {
    let (c, m) = common::model(10.0);
    let tuning = m.tuning.unwrap();
    let goal = m.set.modes[m.set.index_of(8, 3).unwrap()].pole.omega();
    let shift = lamb_shift(&m.set, tuning.omega0, &c.dynamics.resonant, c.dynamics.lamb_convention);
    assert!((tuning.omega0 + shift.re - goal).abs() < 1e-14 * goal);
    assert!(tuning.iterations < 10);
}

#[test]
fn no_gain_at_10_debye() {
    let (_, m) = common::model(10.0);
    let p = Propagator::new(&assemble_generator(&m.set)).unwrap();
    assert!(max_gain(&p) < 1e-10, "{}", max_gain(&p));
    let t = linear_time_grid(4.0 * 4.63e5, 2000);
    let traj = evolve(&assemble_generator(&m.set), &t).unwrap();
    let total = traj.total_probability();
    assert!((total[0] - 1.0).abs() < 1e-12);
    for w in total.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn no_gain_at_100_debye() {
    let (_, m) = common::model(100.0);
    let p = Propagator::new(&assemble_generator(&m.set)).unwrap();
    assert!(max_gain(&p) < 1e-10, "largest Im eigenvalue {}", max_gain(&p));
}

#[test]
fn hermitian_form_is_passive_at_every_dipole() {
    for d in [10.0, 100.0, 1e4] {
        let (_, m) = common::model(10.0);
        let set = m.set.with_dipole(d);
        let p = Propagator::new(&assemble_with_form(&set, CouplingForm::Hermitian)).unwrap();
        assert!(max_gain(&p) < 1e-10, "d = {d}: {}", max_gain(&p));
    }
}

#[test]
fn doubling_the_coupling_halves_the_time_scale() {
    // resonant three-level system without loss: |c0(t)|^2 at 2g equals |c0(2t)|^2 at g
    let gen = |g: f64| EffectiveGenerator {
        omega0: Complex64::new(2.0, 0.0),
        couplings: vec![Complex64::new(g, 0.0), Complex64::new(0.3 * g, 0.0)],
        poles: vec![Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0)],
        labels: vec![(8, 3), (5, 4)],
        form: CouplingForm::Symmetric,
    };
    let t = linear_time_grid(1000.0, 2000);
    let t2: Vec<f64> = t.iter().map(|s| 0.5 * s).collect();
    let slow = evolve(&gen(0.01), &t).unwrap().population();
    let fast = evolve(&gen(0.02), &t2).unwrap().population();
    for (a, b) in slow.iter().zip(&fast) {
        assert!((a - b).abs() < 1e-12);
    }
    let p1 = rabi_period(&t, &slow).unwrap();
    let p2 = rabi_period(&t2, &fast).unwrap();
    assert!((p1 / p2 - 2.0).abs() < 1e-9);
}

#[test]
fn frames_differ_by_the_emitter_phase_only() {
    let (_, m) = common::model(10.0);
    let t = linear_time_grid(1e3, 20);
    let lab = evolve(&assemble_generator(&m.set), &t).unwrap();
    let rot = lab.in_frame(Frame::Interaction);
    let back = rot.in_frame(Frame::Lab);
    for k in 0..t.len() {
        assert!((lab.c0[k].norm() - rot.c0[k].norm()).abs() < 1e-15);
        assert!((back.c0[k] - lab.c0[k]).norm() < 1e-14);
        for i in 0..lab.b.len() {
            assert!((lab.b[i][k].norm() - rot.b[i][k].norm()).abs() < 1e-15);
            assert!((back.b[i][k] - lab.b[i][k]).norm() < 1e-14);
        }
    }
}

#[test]
fn trajectory_csv_has_requested_columns() {
    let (_, m) = common::model(10.0);
    let t = linear_time_grid(10.0, 4);
    let traj = evolve(&assemble_generator(&m.set), &t).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj, Some(&[(8, 3), (5, 4)])).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "ct,abs2_c0,abs2_b_8_3,abs2_b_5_4");
    assert_eq!(lines.count(), 5);
}
