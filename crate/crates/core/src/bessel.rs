//! Spherical Bessel, Neumann and Hankel functions of complex argument.
//!
//! `j_l` comes from a power series near the origin, upward recurrence when the
//! order does not exceed `|Re z|`, and Miller's downward recurrence otherwise.
//! Away from the real axis the Hankel function that is small there comes from
//! its own upward recurrence and the large one is `2 j` minus the small one;
//! `y_l` follows from those. Near the axis `y_l` uses upward recurrence and the
//! Hankel functions are `j ± i y`, which keeps both components accurate.

use num_complex::Complex64;

use crate::error::{Error, Result};

const SERIES_RADIUS: f64 = 0.5;
const MAX_IMAG: f64 = 700.0;
const RESCALE: f64 = 1e150;
/// Beyond this |Im z| the two Hankel functions separate by more than e^4 and
/// upward recurrence of `j` or `y` is no longer safe.
const NEAR_AXIS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselKind {
    J,
    Y,
    H1,
    H2,
}

impl BesselKind {
    pub const ALL: [BesselKind; 4] = [BesselKind::J, BesselKind::Y, BesselKind::H1, BesselKind::H2];

    fn singular_at_origin(self) -> bool {
        !matches!(self, BesselKind::J)
    }
}

/// Spherical Bessel-family function of order `l` at complex `z`.
pub fn bessel_basis(l: usize, kind: BesselKind, z: Complex64) -> Result<Complex64> {
    Ok(sequence(l, kind, z)?[l])
}

/// Values `f_0(z), ..., f_lmax(z)`.
pub fn sequence(lmax: usize, kind: BesselKind, z: Complex64) -> Result<Vec<Complex64>> {
    check_argument(kind, z)?;
    let seq = match kind {
        BesselKind::J => j_sequence(lmax, z),
        BesselKind::Y => y_sequence(lmax, z),
        BesselKind::H1 => {
            if z.im > 0.0 {
                hankel_upward(lmax, z, 1.0)
            } else if z.im >= -NEAR_AXIS {
                combine(&j_sequence(lmax, z), &y_sequence(lmax, z), 1.0)
            } else {
                twice_minus(&j_sequence(lmax, z), &hankel_upward(lmax, z, -1.0))
            }
        }
        BesselKind::H2 => {
            if z.im < 0.0 {
                hankel_upward(lmax, z, -1.0)
            } else if z.im <= NEAR_AXIS {
                combine(&j_sequence(lmax, z), &y_sequence(lmax, z), -1.0)
            } else {
                twice_minus(&j_sequence(lmax, z), &hankel_upward(lmax, z, 1.0))
            }
        }
    };
    if seq.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("{kind:?}_{lmax}({z})")));
    }
    Ok(seq)
}

/// `(f_l(z), f_l'(z))`.
pub fn with_derivative(l: usize, kind: BesselKind, z: Complex64) -> Result<(Complex64, Complex64)> {
    let seq = sequence(l + 1, kind, z)?;
    Ok((seq[l], derivative_from(&seq, l, z)))
}

/// Riccati form `psi(z) = z f_l(z)` and `psi'(z) = z f_{l-1}(z) - l f_l(z)`.
pub fn riccati(l: usize, kind: BesselKind, z: Complex64) -> Result<(Complex64, Complex64)> {
    let seq = sequence(l + 1, kind, z)?;
    let f = seq[l];
    let dpsi = if l == 0 { f - z * seq[1] } else { z * seq[l - 1] - f * l as f64 };
    Ok((z * f, dpsi))
}

/// Riccati pair divided by `z`: returns `(f_l(z), psi'(z))`; regular at the
/// origin for `j`.
pub fn value_and_riccati_derivative(l: usize, kind: BesselKind, z: Complex64) -> Result<(Complex64, Complex64)> {
    let seq = sequence(l + 1, kind, z)?;
    let f = seq[l];
    let dpsi = if l == 0 { f - z * seq[1] } else { z * seq[l - 1] - f * l as f64 };
    Ok((f, dpsi))
}

/// `h1_l(z) exp(-i z)` for `l = 0..=lmax`; finite wherever `h1` itself would overflow.
pub fn hankel1_scaled_sequence(lmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    if !z.is_finite() || z.norm() == 0.0 {
        return Err(Error::Domain(format!("scaled H1 at z = {z}")));
    }
    if z.im.abs() <= MAX_IMAG {
        let phase = (-Complex64::i() * z).exp();
        if let Ok(seq) = sequence(lmax, BesselKind::H1, z) {
            return Ok(seq.into_iter().map(|v| v * phase).collect());
        }
    }
    let i = Complex64::i();
    let seq = upward(lmax, z, -i / z, -(z + i) / (z * z));
    if seq.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("scaled H1_{lmax}({z})")));
    }
    Ok(seq)
}

/// `(h1_l(z) e^{-iz}, psi'(z) e^{-iz})` with `psi = z h1_l`.
pub fn hankel1_scaled_riccati(l: usize, z: Complex64) -> Result<(Complex64, Complex64)> {
    let seq = hankel1_scaled_sequence(l + 1, z)?;
    let f = seq[l];
    let dpsi = if l == 0 { f - z * seq[1] } else { z * seq[l - 1] - f * l as f64 };
    Ok((f, dpsi))
}

fn derivative_from(seq: &[Complex64], l: usize, z: Complex64) -> Complex64 {
    if l == 0 {
        -seq[1]
    } else if z == Complex64::new(0.0, 0.0) {
        // only j reaches here; j_1'(0) = 1/3, others vanish
        if l == 1 {
            Complex64::new(1.0 / 3.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        seq[l - 1] - seq[l] * ((l + 1) as f64) / z
    }
}

fn check_argument(kind: BesselKind, z: Complex64) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if kind.singular_at_origin() && z.norm() == 0.0 {
        return Err(Error::Domain(format!("{kind:?} is singular at z = 0")));
    }
    if z.im.abs() > MAX_IMAG {
        return Err(Error::Overflow(format!("{kind:?} at z = {z} (|Im z| > {MAX_IMAG})")));
    }
    Ok(())
}

fn combine(j: &[Complex64], y: &[Complex64], sign: f64) -> Vec<Complex64> {
    let i = Complex64::new(0.0, sign);
    j.iter().zip(y).map(|(&a, &b)| a + i * b).collect()
}

/// `2 j - h`, the large Hankel function from the small one.
fn twice_minus(j: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    j.iter().zip(h).map(|(&a, &b)| a * 2.0 - b).collect()
}

fn upward(lmax: usize, z: Complex64, f0: Complex64, f1: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(f0);
    if lmax >= 1 {
        out.push(f1);
    }
    let zinv = z.inv();
    for l in 1..lmax {
        let next = out[l] * zinv * (2 * l + 1) as f64 - out[l - 1];
        out.push(next);
    }
    out
}

fn j_closed(z: Complex64) -> (Complex64, Complex64) {
    let (s, c) = (z.sin(), z.cos());
    let j0 = s / z;
    (j0, (j0 - c) / z)
}

fn j_series(l: usize, z: Complex64) -> Complex64 {
    let mut lead = Complex64::new(1.0, 0.0);
    for i in 1..=l {
        lead *= z / (2 * i + 1) as f64;
    }
    let w = -z * z * 0.5;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..60 {
        term *= w / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    lead * sum
}

fn j_sequence(lmax: usize, z: Complex64) -> Vec<Complex64> {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        return (0..=lmax).map(|l| j_series(l, z)).collect();
    }
    let (j0, j1) = j_closed(z);
    if (lmax as f64) <= z.re.abs() && z.im.abs() <= NEAR_AXIS {
        return upward(lmax, z, j0, j1);
    }
    miller(lmax, z, j0, j1)
}

fn miller(lmax: usize, z: Complex64, j0: Complex64, j1: Complex64) -> Vec<Complex64> {
    let top = lmax.max(1);
    let start = top.max(z.norm().ceil() as usize) + 32 + (4.0 * (top as f64).sqrt()) as usize;
    let zinv = z.inv();
    let mut out = vec![Complex64::new(0.0, 0.0); top + 1];
    let mut above = Complex64::new(0.0, 0.0);
    let mut here = Complex64::new(1e-30, 0.0);
    for l in (1..=start).rev() {
        if l <= top {
            out[l] = here;
        }
        let below = here * zinv * (2 * l + 1) as f64 - above;
        above = here;
        here = below;
        if here.norm() > RESCALE {
            let s = 1.0 / RESCALE;
            here *= s;
            above *= s;
            for v in out.iter_mut().skip(l.min(top + 1)) {
                *v *= s;
            }
        }
    }
    out[0] = here;
    let scale = if j0.norm() >= j1.norm() { j0 / out[0] } else { j1 / out[1] };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out.truncate(lmax + 1);
    out
}

fn y_sequence(lmax: usize, z: Complex64) -> Vec<Complex64> {
    let i = Complex64::i();
    if z.im > NEAR_AXIS {
        let j = j_sequence(lmax, z);
        let h1 = hankel_upward(lmax, z, 1.0);
        return j.iter().zip(&h1).map(|(&a, &b)| -i * (b - a)).collect();
    }
    if z.im < -NEAR_AXIS {
        let j = j_sequence(lmax, z);
        let h2 = hankel_upward(lmax, z, -1.0);
        return j.iter().zip(&h2).map(|(&a, &b)| -i * (a - b)).collect();
    }
    let (s, c) = (z.sin(), z.cos());
    let y0 = -c / z;
    let y1 = (y0 - s) / z;
    upward(lmax, z, y0, y1)
}

/// Upward recurrence for h1 (`sign = 1`) or h2 (`sign = -1`) from the closed forms.
fn hankel_upward(lmax: usize, z: Complex64, sign: f64) -> Vec<Complex64> {
    let i = Complex64::new(0.0, sign);
    let e = (i * z).exp();
    let h0 = -i * e / z;
    let h1 = -e * (z + i) / (z * z);
    upward(lmax, z, h0, h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_form_spot_values() {
        let v = bessel_basis(0, BesselKind::J, c(std::f64::consts::PI, 0.0)).unwrap();
        assert!(v.norm() < 1e-16);
        let h = bessel_basis(0, BesselKind::H1, c(0.0, 1.0)).unwrap();
        assert!((h - c(-(-1.0f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn scaled_hankel_matches_and_survives_deep_arguments() {
        for z in [c(3.7, -0.01), c(40.0, -5.0), c(600.0, -300.0), c(2.0, 4.0), c(272.85, -499.26)] {
            let plain = sequence(12, BesselKind::H1, z).unwrap();
            let scaled = hankel1_scaled_sequence(12, z).unwrap();
            let phase = (-Complex64::i() * z).exp();
            for l in 0..=12 {
                assert!((plain[l] * phase - scaled[l]).norm() <= 1e-13 * scaled[l].norm(), "{z} {l}");
            }
        }
        // far beyond the overflow limit the scaled value tends to (-i)^(l+1) / z
        let z = c(4000.0, -3200.0);
        let s = hankel1_scaled_sequence(5, z).unwrap();
        let lead = Complex64::i().powu(3 * 6) / z;
        assert!((s[5] - lead).norm() < 0.01 * lead.norm());
    }

    #[test]
    fn singular_kinds_reject_origin() {
        for kind in [BesselKind::Y, BesselKind::H1, BesselKind::H2] {
            assert!(matches!(bessel_basis(3, kind, c(0.0, 0.0)), Err(Error::Domain(_))));
        }
        assert_eq!(bessel_basis(0, BesselKind::J, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(bessel_basis(4, BesselKind::J, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn overflow_is_flagged() {
        assert!(matches!(bessel_basis(2, BesselKind::J, c(1.0, 800.0)), Err(Error::Overflow(_))));
        assert!(matches!(bessel_basis(40, BesselKind::Y, c(1e-8, 0.0)), Err(Error::Overflow(_))));
    }

    #[test]
    fn series_and_miller_agree_at_handover() {
        for l in [0usize, 1, 5, 12, 40] {
            for z in [c(0.49, 0.1), c(0.3, -0.39), c(-0.2, 0.45)] {
                let s = j_series(l, z);
                let (j0, j1) = j_closed(z);
                let m = miller(l, z, j0, j1)[l];
                assert!((s - m).norm() <= 1e-13 * s.norm(), "l={l} z={z}: {s} vs {m}");
            }
        }
    }

    #[test]
    fn hankel_branches_agree_across_real_axis() {
        for l in [1usize, 8, 30] {
            for x in [0.7, 3.668, 17.0] {
                let above = bessel_basis(l, BesselKind::H1, c(x, 1e-300)).unwrap();
                let on = bessel_basis(l, BesselKind::H1, c(x, 0.0)).unwrap();
                assert!((above - on).norm() <= 1e-13 * on.norm());
            }
        }
    }
}
