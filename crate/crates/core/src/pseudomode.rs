//! Emitter couplings: the continuum coupling `g_l(k)`, the pseudomode radial
//! functions and the pseudomode couplings `gbar_ln`.
//!
//! For an emitter at radius `r` the continuum spectral density of order `l` is
//!
//! ```text
//! J_l(k) = k d^2 l(l+1) Y_l0(0)^2 Z_l(k r)^2 / (pi eps s^2 (alpha+i beta)(alpha-i beta))
//! ```
//!
//! with `s = sqrt(eps) r`. Its residue at a pole gives `gbar^2 = -2 pi i Res J`,
//! which factorises as `gbar = sqrt(z / 2 eps) d Y_l0(0) sqrt(l(l+1)) v(r) / (pi s)`
//! with the pseudomode radial function
//! `v(r) = pi sqrt((alpha - i beta) / (i d(alpha + i beta)/dz)) h1_l(z r)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_basis, hankel1_scaled_riccati, value_and_riccati_derivative, BesselKind};
use crate::error::{Error, Result};
use crate::mie::{incoming_coefficient, match_interface, outgoing_coefficient, ResonatorSpec};
use crate::poles::{incoming_derivative, Pole, PoleSet, PoleWindow};
use crate::units::dipole_length;

/// Emitter radius at which the (8,3) vacuum Rabi period of a 10 D dipole is
/// 4.63e5 µm for the 1 µm silicon sphere. Not the default: there the deep
/// poles couple strongly enough to make the pseudomode generator gain.
pub const CALIBRATED_EMITTER_RADIUS: f64 = 1.252_694_8;

/// Radially oriented two-level emitter on the polar axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    /// Distance from the sphere centre in µm.
    pub radius: f64,
    /// Dipole moment in Debye.
    pub dipole_debye: f64,
    /// Bare transition frequency in rad/µm.
    pub omega0: f64,
}

impl EmitterSpec {
    pub fn new(radius: f64, dipole_debye: f64, omega0: f64) -> Result<Self> {
        let e = EmitterSpec { radius, dipole_debye, omega0 };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.dipole_debye >= 0.0) || !(self.omega0 > 0.0) {
            return Err(Error::InvalidInput(format!("emitter needs r > 0, d >= 0, omega0 > 0: {self:?}")));
        }
        Ok(())
    }

    /// Dipole moment as a length in µm.
    pub fn dipole(&self) -> f64 {
        dipole_length(self.dipole_debye)
    }

    pub fn with_dipole(&self, dipole_debye: f64) -> Self {
        EmitterSpec { dipole_debye, ..*self }
    }
}

fn legendre(l: usize, x: f64) -> (f64, f64) {
    // (P_l(x), P_l'(x))
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    if l == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=l {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        let d2 = d0 + (2 * k - 1) as f64 * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Normalised angular amplitude `A_l(theta) = Y_l0(theta)`; the radial field
/// of a unit-normalised N mode is `A_l(theta) l(l+1) Z / (sqrt(eps) k r)` up to
/// the radial normalisation.
pub fn vsh_radial_component(l: usize, m: i32, theta: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidInput("l = 0 has no TM mode".into()));
    }
    if m != 0 {
        return Err(Error::InvalidInput(format!("only m = 0 couples to an on-axis radial dipole, got m = {m}")));
    }
    Ok(((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre(l, theta.cos()).0)
}

/// `dY_l0/dtheta`.
pub fn angular_derivative(l: usize, theta: f64) -> f64 {
    -((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * theta.sin() * legendre(l, theta.cos()).1
}

fn angular_factor(l: usize) -> f64 {
    let y = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    y * y * (l * (l + 1)) as f64
}

/// Outside-branch radial function in the stable form
/// `Z = ((alpha - i beta) h1 + (alpha + i beta) h2) / 2`.
fn radial_stable(spec: &ResonatorSpec, l: usize, k: Complex64, r: f64) -> Result<Complex64> {
    if r < spec.radius {
        return bessel_basis(l, BesselKind::J, k * spec.refractive_index * r);
    }
    let plus = incoming_coefficient(spec, l, k)?;
    let minus = outgoing_coefficient(spec, l, k)?;
    let h1 = bessel_basis(l, BesselKind::H1, k * r)?;
    let h2 = bessel_basis(l, BesselKind::H2, k * r)?;
    Ok((minus * h1 + plus * h2) * 0.5)
}

/// Product `Z(k r) Z(k r') / ((alpha + i beta)(alpha - i beta))` continued to complex `k`.
pub fn radial_kernel(spec: &ResonatorSpec, l: usize, k: Complex64, r: f64, r_prime: f64) -> Result<Complex64> {
    let plus = incoming_coefficient(spec, l, k)?;
    let minus = outgoing_coefficient(spec, l, k)?;
    let z1 = radial_stable(spec, l, k, r)?;
    let z2 = if r_prime == r { z1 } else { radial_stable(spec, l, k, r_prime)? };
    Ok(z1 * z2 / (plus * minus))
}

/// Continuum spectral density `J_l(k) = rho(k) g_l(k)^2` (R-free), analytic in `k`.
pub fn spectral_density(spec: &ResonatorSpec, emitter: &EmitterSpec, l: usize, k: Complex64) -> Result<Complex64> {
    let r = emitter.radius;
    let eps = spec.permittivity(r);
    let s2 = eps * r * r;
    let d = emitter.dipole();
    Ok(k * d * d * angular_factor(l) / (PI * eps * s2) * radial_kernel(spec, l, k, r, r)?)
}

/// Continuum coupling `g_l(k)` with the box mode density absorbed, real `k > 0`.
pub fn continuum_coupling_g(spec: &ResonatorSpec, emitter: &EmitterSpec, l: usize, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    let r = emitter.radius;
    let eps = spec.permittivity(r);
    let c = match_interface(spec, l, Complex64::new(k, 0.0))?;
    let (alpha, beta) = (c.alpha.re, c.beta.re);
    let z = crate::mie::radial_z(spec, l, Complex64::new(k, 0.0), r, false)?.re;
    let s = eps.sqrt() * r;
    let inv_sqrt_pi_im = (2.0f64).sqrt() * k / (PI * (alpha * alpha + beta * beta)).sqrt();
    Ok((k / (2.0 * eps)).sqrt() * emitter.dipole() * angular_factor(l).sqrt() * z / (s * k) * inv_sqrt_pi_im)
}

/// Pole-dependent pieces of the pseudomode radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFactors {
    /// `d(alpha + i beta)/dz` at the pole.
    pub derivative: Complex64,
    /// `alpha - i beta` at the pole.
    pub outgoing: Complex64,
    /// `pi sqrt((alpha - i beta) / (i d(alpha + i beta)/dz))`, principal branch.
    pub prefactor: Complex64,
}

pub fn pole_factors(spec: &ResonatorSpec, pole: &Pole) -> Result<PoleFactors> {
    let derivative = incoming_derivative(spec, pole.l, pole.z)?;
    // At a zero of alpha + i beta the Wronskian gives alpha - i beta = 2 n j(n x) / h1(x),
    // which avoids the cancellation of the direct form for high-Q poles.
    let x = pole.z * spec.radius;
    let inner = bessel_basis(pole.l, BesselKind::J, x * spec.refractive_index)?;
    let outgoing = inner * spec.refractive_index * 2.0 / bessel_basis(pole.l, BesselKind::H1, x)?;
    let prefactor = (outgoing / (Complex64::i() * derivative)).sqrt() * PI;
    Ok(PoleFactors { derivative, outgoing, prefactor })
}

/// Radial function `v(r)` of a pseudomode with the given prefactor. Outside
/// it is `prefactor h1(z r)`; inside it continues the regular solution as
/// `prefactor 2 j(n z r) / (alpha - i beta)`.
pub fn radial_with_factors(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64) -> Result<Complex64> {
    if r >= spec.radius {
        Ok(f.prefactor * bessel_basis(pole.l, BesselKind::H1, pole.z * r)?)
    } else {
        let j = bessel_basis(pole.l, BesselKind::J, pole.z * spec.refractive_index * r)?;
        Ok(f.prefactor * j * 2.0 / f.outgoing)
    }
}

/// `v(r)` for a pole, principal branch of the square root.
pub fn pseudomode_radial(spec: &ResonatorSpec, pole: &Pole, r: f64) -> Result<Complex64> {
    radial_with_factors(spec, pole, &pole_factors(spec, pole)?, r)
}

/// `(v(r), (1/s) d(s v)/ds)` with `s = sqrt(eps) z r`, for the tangential field.
fn radial_and_tangential(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64) -> Result<(Complex64, Complex64)> {
    let l = pole.l;
    if r >= spec.radius {
        let rho = pole.z * r;
        let (h, dpsi) = value_and_riccati_derivative(l, BesselKind::H1, rho)?;
        Ok((f.prefactor * h, f.prefactor * dpsi / rho))
    } else {
        let rho = pole.z * spec.refractive_index * r;
        let (j, dpsi) = value_and_riccati_derivative(l, BesselKind::J, rho)?;
        let c = f.prefactor * 2.0 / f.outgoing;
        Ok((c * j, c * dpsi / rho))
    }
}

/// `radial_and_tangential` times `exp(-i z shift)`, with the exponential growth
/// of the outgoing branch cancelled analytically.
fn radial_and_tangential_shifted(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64, shift: f64) -> Result<(Complex64, Complex64)> {
    if r < spec.radius {
        let (v, t) = radial_and_tangential(spec, pole, f, r)?;
        let phase = (-Complex64::i() * pole.z * shift).exp();
        return Ok((v * phase, t * phase));
    }
    let rho = pole.z * r;
    let (h, dpsi) = hankel1_scaled_riccati(pole.l, rho)?;
    let phase = (Complex64::i() * pole.z * (r - shift)).exp();
    Ok((f.prefactor * h * phase, f.prefactor * dpsi / rho * phase))
}

/// Radial component of the pseudomode electric field per unit amplitude at
/// angle `theta`; `gbar = d * mode_field_radial(r_emit, 0)`.
pub fn mode_field_radial(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64, theta: f64) -> Result<Complex64> {
    let eps = spec.permittivity(r);
    let v = radial_with_factors(spec, pole, f, r)?;
    let y = vsh_radial_component(pole.l, 0, theta)?;
    let ll = ((pole.l * (pole.l + 1)) as f64).sqrt();
    Ok((pole.z / (2.0 * eps)).sqrt() * y * ll * v / (PI * eps.sqrt() * r))
}

/// `(E_r, E_theta)` of the pseudomode per unit amplitude, normalised like
/// [`mode_field_radial`].
pub fn mode_field_vector(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64, theta: f64) -> Result<[Complex64; 2]> {
    retarded_mode_field(spec, pole, f, r, theta, 0.0)
}

/// `mode_field_vector(r, theta) * exp(-i z delay)`, finite at any distance
/// when `delay` grows with `r` like the retardation.
pub fn retarded_mode_field(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64, theta: f64, delay: f64) -> Result<[Complex64; 2]> {
    let eps = spec.permittivity(r);
    let (v, t) = radial_and_tangential_shifted(spec, pole, f, r, delay)?;
    let y = vsh_radial_component(pole.l, 0, theta)?;
    let dy = angular_derivative(pole.l, theta);
    let ll = ((pole.l * (pole.l + 1)) as f64).sqrt();
    let scale = (pole.z / (2.0 * eps)).sqrt() / PI;
    let radial = scale * y * ll * v / (eps.sqrt() * r);
    // (1/rho) d(rho v)/d rho with rho = sqrt(eps) z r, times z / sqrt(l(l+1))
    let polar = scale * pole.z * t * dy / ll;
    Ok([radial, polar])
}

/// `|v|^2` summed over the radial and polar components of the vector
/// pseudomode at `(r, theta)`.
pub fn pseudomode_intensity(spec: &ResonatorSpec, pole: &Pole, f: &PoleFactors, r: f64, theta: f64) -> Result<f64> {
    let (v, t) = radial_and_tangential(spec, pole, f, r)?;
    let rho = pole.z * spec.permittivity(r).sqrt() * r;
    let ll = (pole.l * (pole.l + 1)) as f64;
    let y = vsh_radial_component(pole.l, 0, theta)?;
    let dy = angular_derivative(pole.l, theta);
    // N = [l(l+1) Z/rho Y, (rho Z)'/rho dY/dtheta] / sqrt(l(l+1))
    let radial = v / rho * ll.sqrt() * y;
    let polar = t * dy / ll.sqrt();
    Ok(radial.norm_sqr() + polar.norm_sqr())
}

/// Pseudomode coupling `gbar_ln` (rad/µm) for the emitter, principal branch.
pub fn coupling_gbar(spec: &ResonatorSpec, emitter: &EmitterSpec, pole: &Pole) -> Result<Complex64> {
    let f = pole_factors(spec, pole)?;
    Ok(mode_field_radial(spec, pole, &f, emitter.radius, 0.0)? * emitter.dipole())
}

/// `-2 pi i Res J_l` at the pole from a small circular contour (trapezoid rule).
pub fn numerical_residue_weight(spec: &ResonatorSpec, emitter: &EmitterSpec, pole: &Pole, radius: f64) -> Result<Complex64> {
    let n = 64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let phi = 2.0 * PI * i as f64 / n as f64;
        let dz = Complex64::from_polar(radius, phi);
        // dk = i dz dphi; (1/2 pi i) oint J dk = mean(J dz)
        sum += spectral_density(spec, emitter, pole.l, pole.z + dz)? * dz;
    }
    let residue = sum / n as f64;
    Ok(-2.0 * PI * Complex64::i() * residue)
}

/// One pseudomode: its pole, the radial prefactor and its coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pseudomode {
    pub pole: Pole,
    pub factors: PoleFactors,
    pub gbar: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudomodeSet {
    pub resonator: ResonatorSpec,
    pub window: PoleWindow,
    pub emitter: EmitterSpec,
    pub modes: Vec<Pseudomode>,
}

impl PseudomodeSet {
    pub fn index_of(&self, l: usize, n: usize) -> Option<usize> {
        self.modes.iter().position(|m| m.pole.l == l && m.pole.n == n)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Same poles, couplings rescaled to another dipole moment.
    pub fn with_dipole(&self, dipole_debye: f64) -> PseudomodeSet {
        let scale = if self.emitter.dipole_debye == 0.0 { 0.0 } else { dipole_debye / self.emitter.dipole_debye };
        let mut out = self.clone();
        out.emitter.dipole_debye = dipole_debye;
        for m in &mut out.modes {
            m.gbar *= scale;
        }
        out
    }

    pub fn with_omega0(&self, omega0: f64) -> PseudomodeSet {
        let mut out = self.clone();
        out.emitter.omega0 = omega0;
        out
    }

    /// Flip the square-root branch of selected modes (observables must not change).
    pub fn with_flipped_branches(&self, flip: impl Fn(usize) -> bool) -> PseudomodeSet {
        let mut out = self.clone();
        for (i, m) in out.modes.iter_mut().enumerate() {
            if flip(i) {
                m.factors.prefactor = -m.factors.prefactor;
                m.gbar = -m.gbar;
            }
        }
        out
    }
}

/// Pseudomodes for every pole in `poles`, built in parallel. The square-root
/// branch is principal, then made continuous along each order's pole list.
pub fn build_pseudomodes(poles: &PoleSet, emitter: &EmitterSpec) -> Result<PseudomodeSet> {
    emitter.validate()?;
    let spec = poles.resonator;
    let built: Vec<Result<Pseudomode>> = poles
        .poles
        .par_iter()
        .map(|p| {
            let factors = pole_factors(&spec, p)?;
            let gbar = mode_field_radial(&spec, p, &factors, emitter.radius, 0.0)? * emitter.dipole();
            Ok(Pseudomode { pole: *p, factors, gbar })
        })
        .collect();
    let mut modes = built.into_iter().collect::<Result<Vec<_>>>()?;
    for i in 1..modes.len() {
        if modes[i].pole.l == modes[i - 1].pole.l {
            let prev = modes[i - 1].factors.prefactor;
            let m = &mut modes[i];
            if (m.factors.prefactor * prev.conj()).re < 0.0 {
                let before = m.gbar.norm_sqr();
                m.factors.prefactor = -m.factors.prefactor;
                m.gbar = -m.gbar;
                let diff = (m.gbar.norm_sqr() - before).abs();
                if diff > 1e-12 * before.max(f64::MIN_POSITIVE) {
                    return Err(Error::BranchAmbiguity { l: m.pole.l, n: m.pole.n, diff });
                }
            }
        }
    }
    Ok(PseudomodeSet { resonator: spec, window: poles.window, emitter: *emitter, modes })
}

/// Emitter radius outside the sphere at which `|2 gbar| = 2 pi / period` for
/// the given pole and dipole, by bisection on `[a, a + 2]` µm.
pub fn calibrate_emitter_radius(spec: &ResonatorSpec, pole: &Pole, dipole_debye: f64, period: f64) -> Result<f64> {
    let target = PI / period;
    let g = |r: f64| -> Result<f64> {
        let e = EmitterSpec::new(r, dipole_debye, pole.z.re)?;
        Ok(coupling_gbar(spec, &e, pole)?.norm() - target)
    };
    let (mut lo, mut hi) = (spec.radius, spec.radius + 2.0);
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return Err(Error::InvalidInput(format!("period {period} not reachable for r in [{lo}, {hi}]")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid)?.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn write_coupling_csv<W: Write>(mut w: W, set: &PseudomodeSet) -> std::io::Result<()> {
    writeln!(w, "l,n,re_z,im_z,re_gbar,im_gbar,abs_gbar")?;
    for m in &set.modes {
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.10e},{:.10e},{:.10e}",
            m.pole.l,
            m.pole.n,
            m.pole.z.re,
            m.pole.z.im,
            m.gbar.re,
            m.gbar.im,
            m.gbar.norm()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::refine_pole;

    fn si() -> ResonatorSpec {
        ResonatorSpec::silicon_microsphere()
    }

    fn pole(l: usize, seed: Complex64, n: usize) -> Pole {
        Pole { n, ..refine_pole(&si(), l, seed).unwrap() }
    }

    #[test]
    fn only_m0_supported() {
        assert!(vsh_radial_component(3, 1, 0.0).is_err());
        let a1 = vsh_radial_component(1, 0, 0.0).unwrap();
        assert!((a1 - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn angular_normalisation() {
        let (x, w) = crate::quad::gauss_legendre(64);
        for l in [1, 5, 8, 30] {
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(&c, &wt)| {
                    let y = vsh_radial_component(l, 0, c.acos()).unwrap();
                    2.0 * PI * wt * y * y
                })
                .sum();
            assert!((s - 1.0).abs() < 1e-10, "l={l}: {s}");
        }
    }

    #[test]
    fn zero_dipole_gives_zero_couplings() {
        let e = EmitterSpec::new(1.0, 0.0, 3.6).unwrap();
        assert_eq!(continuum_coupling_g(&si(), &e, 8, 3.0).unwrap(), 0.0);
        let p = pole(8, Complex64::new(3.66, -1e-3), 3);
        assert_eq!(coupling_gbar(&si(), &e, &p).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gbar_is_linear_in_dipole() {
        let p = pole(8, Complex64::new(3.66, -1e-3), 3);
        let e10 = EmitterSpec::new(CALIBRATED_EMITTER_RADIUS, 10.0, 3.6).unwrap();
        let g10 = coupling_gbar(&si(), &e10, &p).unwrap();
        let g100 = coupling_gbar(&si(), &e10.with_dipole(100.0), &p).unwrap();
        assert!((g100 / g10 - 10.0).norm() < 1e-12);
    }

    #[test]
    fn calibrated_radius_reproduces_rabi_anchor() {
        let p = pole(8, Complex64::new(3.66, -1e-3), 3);
        let r = calibrate_emitter_radius(&si(), &p, 10.0, 4.63e5).unwrap();
        assert!((r - CALIBRATED_EMITTER_RADIUS).abs() < 1e-6, "{r}");
    }

    #[test]
    fn pseudomode_grows_outside() {
        let p = pole(5, Complex64::new(3.66, -1e-2), 4);
        let f = pole_factors(&si(), &p).unwrap();
        let v1 = radial_with_factors(&si(), &p, &f, 50.0).unwrap().norm();
        let v2 = radial_with_factors(&si(), &p, &f, 150.0).unwrap().norm();
        let expected = (p.gamma() * 100.0).exp() * 50.0 / 150.0;
        assert!((v2 / v1 / expected - 1.0).abs() < 1e-2);
    }
}
