mod common;

use mie_pseudomode::dynamics::*;
use mie_pseudomode::field::*;

const A: f64 = 1.0;

fn spectral(p: &Propagator, horizon: f64) -> AmplitudeSource {
    AmplitudeSource::Spectral { propagator: p.clone(), horizon }
}

#[test]
fn field_vanishes_before_the_light_cone() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let rec = FieldReconstructor::new(&m.set, spectral(&p, 50.0), ModeFilter::All, DelayConvention::SurfaceSum);
    for r in [1.5, 3.0, 10.0, 40.0] {
        let d = rec.delay_at(r);
        assert!((d - (r - A) - (m.set.emitter.radius - A)).abs() < 1e-15);
        for f in [0.0, 0.5, 0.999_999] {
            assert_eq!(rec.intensity(r, 0.3, f * d).unwrap(), 0.0);
        }
        assert!(rec.intensity(r, 0.3, d + 1.0).unwrap() > 0.0);
    }
}

#[test]
fn filters_split_the_field_additively() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let pick = vec![(8, 3), (5, 4), (12, 1)];
    let make = |f| FieldReconstructor::new(&m.set, spectral(&p, 100.0), f, DelayConvention::SurfaceSum);
    let (all, only, except) = (make(ModeFilter::All), make(ModeFilter::Only(pick.clone())), make(ModeFilter::Except(pick)));
    for (r, t) in [(1.2, 3.0), (2.0, 10.0), (5.0, 40.0), (20.0, 90.0)] {
        let (ea, eo, ee) = (all.field_amplitude(r, 0.7, t).unwrap(), only.field_amplitude(r, 0.7, t).unwrap(), except.field_amplitude(r, 0.7, t).unwrap());
        for k in 0..2 {
            let scale = ea[k].norm().max(eo[k].norm()).max(ee[k].norm());
            assert!((ea[k] - eo[k] - ee[k]).norm() <= 1e-12 * scale, "r = {r}, t = {t}");
        }
    }
}

#[test]
fn zero_dipole_radiates_nothing() {
    let (c, m) = common::model(10.0);
    let set = m.set.with_dipole(0.0);
    let p = Propagator::new(&assemble_with_form(&set, c.dynamics.coupling_form)).unwrap();
    let rec = FieldReconstructor::new(&set, spectral(&p, 100.0), ModeFilter::All, DelayConvention::SurfaceSum);
    for (r, t) in [(1.5, 5.0), (10.0, 50.0)] {
        assert_eq!(rec.intensity(r, 0.4, t).unwrap(), 0.0);
    }
}

#[test]
fn field_stays_finite_far_from_the_sphere() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let rec = FieldReconstructor::new(&m.set, spectral(&p, 50.0), ModeFilter::All, DelayConvention::SurfaceSum);
    for r in [50.0, 200.0, 1000.0] {
        let d = rec.delay_at(r);
        for dt in [0.1, 5.0, 40.0] {
            let e = rec.field_amplitude(r, 1.1, d + dt).unwrap();
            assert!(e.iter().all(|v| v.is_finite()), "r = {r}, t = D + {dt}: {e:?}");
        }
    }
}

#[test]
fn trajectory_past_its_end_is_rejected() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let rec = FieldReconstructor::new(&m.set, spectral(&p, 10.0), ModeFilter::All, DelayConvention::SurfaceSum);
    let d = rec.delay_at(5.0);
    assert!(rec.intensity(5.0, 0.0, d + 10.0).is_ok());
    assert!(rec.intensity(5.0, 0.0, d + 10.5).is_err());
}

#[test]
fn sampled_and_spectral_sources_agree() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let t = linear_time_grid(30.0, 3000);
    let lab = evolve(&assemble_with_form(&m.set, c.dynamics.coupling_form), &t).unwrap();
    let inter = lab.in_frame(Frame::Interaction);
    let filter = ModeFilter::Only(vec![(8, 3), (5, 4)]);
    let exact = FieldReconstructor::new(&m.set, spectral(&p, 30.0), filter.clone(), DelayConvention::SurfaceSum);
    let from_lab = FieldReconstructor::new(&m.set, AmplitudeSource::Sampled(lab), filter.clone(), DelayConvention::SurfaceSum);
    let from_inter = FieldReconstructor::new(&m.set, AmplitudeSource::Sampled(inter), filter, DelayConvention::SurfaceSum);
    for (r, s) in [(1.5, 0.37), (3.0, 12.345), (8.0, 29.9)] {
        let tt = exact.delay_at(r) + s;
        let (a, b, e) = (from_lab.field_amplitude(r, 0.5, tt).unwrap(), from_inter.field_amplitude(r, 0.5, tt).unwrap(), exact.field_amplitude(r, 0.5, tt).unwrap());
        for k in 0..2 {
            assert!((a[k] - b[k]).norm() <= 1e-12 * e[k].norm(), "frames differ at r = {r}");
            assert!((a[k] - e[k]).norm() <= 1e-6 * e[k].norm(), "sampled {} vs spectral {} at r = {r}", a[k], e[k]);
        }
    }
}

#[test]
fn resonant_intensity_oscillates_at_the_rabi_period() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let horizon = 1.6e5;
    let rec = FieldReconstructor::new(&m.set, spectral(&p, horizon), ModeFilter::Only(vec![(8, 3)]), DelayConvention::SurfaceSum);
    let r = 2.0;
    let d = rec.delay_at(r);
    let t: Vec<f64> = (0..=1600).map(|i| d + horizon * i as f64 / 1600.0).collect();
    let map = rec.intensity_map(&[r], &t, 0.2).unwrap();
    let pop: Vec<f64> = t.iter().map(|&s| p.c0(s - d).norm_sqr()).collect();
    let field_period = rabi_period(&t, &map.intensity[0]).unwrap();
    let emitter_period = rabi_period(&t, &pop).unwrap();
    assert!((field_period / emitter_period - 1.0).abs() < 0.02, "{field_period} vs {emitter_period}");
}

#[test]
fn field_map_normalizes_and_writes() {
    let (c, m) = common::model(10.0);
    let p = m.propagator(&c).unwrap();
    let rec = FieldReconstructor::new(&m.set, spectral(&p, 20.0), ModeFilter::Only(vec![(8, 3)]), DelayConvention::SurfaceSum);
    let map = rec.intensity_map(&[1.5, 3.0, 6.0], &[0.0, 5.0, 10.0, 20.0], 0.0).unwrap();
    assert_eq!(map.max_outside_cone(A, 0.0), 0.0);
    let n = map.normalized();
    assert!((n.max() - 1.0).abs() < 1e-15);
    let mut buf = Vec::new();
    map.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);
}
