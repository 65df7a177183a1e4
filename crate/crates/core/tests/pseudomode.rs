use mie_pseudomode::mie::ResonatorSpec;
use mie_pseudomode::poles::refine_pole;
use mie_pseudomode::pseudomode::*;
use num_complex::Complex64;
use std::f64::consts::PI;

fn si() -> ResonatorSpec {
    ResonatorSpec::silicon_microsphere()
}

#[test]
fn gbar_squared_matches_contour_residue() {
    let spec = si();
    let e = EmitterSpec::new(CALIBRATED_EMITTER_RADIUS, 10.0, 3.6).unwrap();
    for (l, seed) in [(8, Complex64::new(3.668, -2e-6)), (5, Complex64::new(3.664, -9e-3)), (2, Complex64::new(1.5, -0.3)), (20, Complex64::new(16.0, -1.0))] {
        let p = refine_pole(&spec, l, seed).unwrap();
        let g = coupling_gbar(&spec, &e, &p).unwrap();
        let radius = 0.4 * p.gamma().min(0.05);
        let w = numerical_residue_weight(&spec, &e, &p, radius).unwrap();
        let rel = (g * g - w).norm() / w.norm();
        assert!(rel < 1e-6, "l={l} z={}: {} vs {w} ({rel})", p.z, g * g);
    }
}

#[test]
fn gbar_squared_matches_residue_inside() {
    let spec = si();
    let e = EmitterSpec::new(0.6, 10.0, 3.6).unwrap();
    let p = refine_pole(&spec, 5, Complex64::new(3.664, -9e-3)).unwrap();
    let g = coupling_gbar(&spec, &e, &p).unwrap();
    let w = numerical_residue_weight(&spec, &e, &p, 1e-3).unwrap();
    assert!((g * g - w).norm() < 1e-6 * w.norm());
}

#[test]
fn pseudomode_matches_tangential_field_at_surface() {
    let spec = si();
    let p = refine_pole(&spec, 8, Complex64::new(3.668, -2e-6)).unwrap();
    let f = pole_factors(&spec, &p).unwrap();
    let a = spec.radius;
    let inside = radial_with_factors(&spec, &p, &f, a * (1.0 - 1e-12)).unwrap();
    let outside = radial_with_factors(&spec, &p, &f, a).unwrap();
    assert!((inside * spec.refractive_index - outside).norm() < 1e-8 * outside.norm());
}

#[test]
fn free_space_density_sums_to_vacuum_rate() {
    let vacuum = ResonatorSpec::new(1.0, 1.0).unwrap();
    let e = EmitterSpec::new(1.7, 1.0, 1.0).unwrap();
    let d = e.dipole();
    for k in [0.5, 2.0, 6.0] {
        let total: f64 = (1..=80).map(|l| spectral_density(&vacuum, &e, l, Complex64::new(k, 0.0)).unwrap().re).sum();
        let expected = d * d * k.powi(3) / (6.0 * PI * PI);
        assert!((total / expected - 1.0).abs() < 1e-10, "k={k}: {total} vs {expected}");
    }
}

#[test]
fn continuum_coupling_squares_to_density() {
    let spec = si();
    let e = EmitterSpec::new(1.3, 10.0, 3.6).unwrap();
    for l in [1, 8, 15] {
        for k in [0.7, 3.6, 9.1] {
            let g = continuum_coupling_g(&spec, &e, l, k).unwrap();
            let j = spectral_density(&spec, &e, l, Complex64::new(k, 0.0)).unwrap();
            assert!((g * g - j.re).abs() <= 1e-10 * j.re.abs() && j.im.abs() <= 1e-10 * j.re.abs());
        }
    }
}

#[test]
fn branch_flip_leaves_gbar_squared() {
    let spec = si();
    let e = EmitterSpec::new(CALIBRATED_EMITTER_RADIUS, 10.0, 3.6).unwrap();
    let p = refine_pole(&spec, 8, Complex64::new(3.668, -2e-6)).unwrap();
    let mut f = pole_factors(&spec, &p).unwrap();
    assert!(f.prefactor.re >= 0.0);
    let g1 = mode_field_radial(&spec, &p, &f, e.radius, 0.0).unwrap();
    f.prefactor = -f.prefactor;
    let g2 = mode_field_radial(&spec, &p, &f, e.radius, 0.0).unwrap();
    assert!((g1 * g1 - g2 * g2).norm() < 1e-15 * g1.norm_sqr());
}

#[test]
fn at_pole_radial_function_is_purely_outgoing() {
    let spec = si();
    let p = refine_pole(&spec, 5, Complex64::new(3.664, -9e-3)).unwrap();
    let minus = mie_pseudomode::mie::outgoing_coefficient(&spec, 5, p.z).unwrap();
    for r in [1.0, 1.4, 3.0] {
        let z = mie_pseudomode::mie::radial_z(&spec, 5, p.z, r, false).unwrap();
        let h = mie_pseudomode::bessel::bessel_basis(5, mie_pseudomode::bessel::BesselKind::H1, p.z * r).unwrap();
        assert!((z - minus * h * 0.5).norm() < 1e-9 * z.norm());
    }
}

#[test]
fn coupling_squared_tracks_inverse_norm_up_to_radial_factor() {
    let spec = si();
    let e = EmitterSpec::new(CALIBRATED_EMITTER_RADIUS, 10.0, 3.6).unwrap();
    let p = refine_pole(&spec, 8, Complex64::new(3.668, -2e-6)).unwrap();
    let ratio = |k: f64| {
        let g = continuum_coupling_g(&spec, &e, 8, k).unwrap();
        let z = mie_pseudomode::mie::radial_z(&spec, 8, Complex64::new(k, 0.0), e.radius, false).unwrap().re;
        let im = mie_pseudomode::mie::mode_norm_im(&spec, 8, k).unwrap();
        g * g * im / (z * z / k)
    };
    let (on, off) = (ratio(p.omega()), ratio(p.omega() + 0.1));
    assert!((on / off - 1.0).abs() < 1e-6);
}
