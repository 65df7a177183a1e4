//! TM interface matching for a homogeneous dielectric sphere in vacuum.
//!
//! The radial function of an N-type mode is `Z_l = eta j_l(n k r)` inside and
//! `alpha j_l(k r) + beta y_l(k r)` outside. With the gauge `eta = 1` the
//! coefficients are real on the real axis and
//!
//! ```text
//! alpha + i beta = -i x [A psi'_h1(x) - B h1(x)]
//! alpha - i beta =  i x [A psi'_h2(x) - B h2(x)]
//! ```
//!
//! with `x = k a`, `A = n j_l(n x)`, `B = psi'_j(n x) / n`. The incoming
//! combination `alpha + i beta` vanishes at the natural-mode poles.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{value_and_riccati_derivative, BesselKind};
use crate::error::{Error, Result};

/// Sphere of radius `radius` (µm) and refractive index `refractive_index` in vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    pub radius: f64,
    pub refractive_index: f64,
}

impl ResonatorSpec {
    /// `refractive_index = 1` is accepted as the homogeneous-space limit.
    pub fn new(radius: f64, refractive_index: f64) -> Result<Self> {
        let spec = ResonatorSpec { radius, refractive_index };
        spec.validate()?;
        Ok(spec)
    }

    /// The 1 µm silicon sphere, n = 3.446.
    pub fn silicon_microsphere() -> Self {
        ResonatorSpec { radius: 1.0, refractive_index: 3.446 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.refractive_index >= 1.0 && self.refractive_index.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "refractive index must be >= 1, got {}",
                self.refractive_index
            )));
        }
        Ok(())
    }

    pub fn permittivity_inside(&self) -> f64 {
        self.refractive_index * self.refractive_index
    }

    pub fn permittivity_outside(&self) -> f64 {
        1.0
    }

    /// Permittivity at radius `r`; the surface itself counts as outside.
    pub fn permittivity(&self, r: f64) -> f64 {
        if r < self.radius {
            self.permittivity_inside()
        } else {
            self.permittivity_outside()
        }
    }
}

/// Matching coefficients of `Z_l` at wavenumber `k` (possibly complex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub l: usize,
    pub k: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub eta: Complex64,
}

struct Interface {
    x: Complex64,
    a_coef: Complex64,
    b_coef: Complex64,
}

fn interface(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<Interface> {
    if l == 0 {
        return Err(Error::InvalidInput("l = 0 has no TM mode".into()));
    }
    let n = spec.refractive_index;
    let x = z * spec.radius;
    let (jn, dpsi_n) = value_and_riccati_derivative(l, BesselKind::J, x * n)?;
    Ok(Interface { x, a_coef: jn * n, b_coef: dpsi_n / n })
}

/// Coefficients making the tangential E and H fields of `Z_l` continuous at `r = a`.
pub fn match_interface(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<ModeCoefficients> {
    let s = interface(spec, l, z)?;
    let (j, dpsi_j) = value_and_riccati_derivative(l, BesselKind::J, s.x)?;
    let (y, dpsi_y) = value_and_riccati_derivative(l, BesselKind::Y, s.x)?;
    let alpha = s.x * (s.a_coef * dpsi_y - y * s.b_coef);
    let beta = s.x * (j * s.b_coef - s.a_coef * dpsi_j);
    Ok(ModeCoefficients { l, k: z, alpha, beta, eta: Complex64::new(1.0, 0.0) })
}

/// `alpha + i beta`, evaluated without cancellation; zero at the poles.
pub fn incoming_coefficient(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<Complex64> {
    let s = interface(spec, l, z)?;
    let (h, dpsi_h) = value_and_riccati_derivative(l, BesselKind::H1, s.x)?;
    Ok(-Complex64::i() * s.x * (s.a_coef * dpsi_h - s.b_coef * h))
}

/// `alpha - i beta`, evaluated without cancellation.
pub fn outgoing_coefficient(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<Complex64> {
    let s = interface(spec, l, z)?;
    let (h, dpsi_h) = value_and_riccati_derivative(l, BesselKind::H2, s.x)?;
    Ok(Complex64::i() * s.x * (s.a_coef * dpsi_h - s.b_coef * h))
}

/// Which side of the interface a radial quantity is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// `Z_l` on a chosen branch (either may be continued past `r = a`).
pub fn radial_branch(spec: &ResonatorSpec, coef: &ModeCoefficients, r: f64, side: Side) -> Result<Complex64> {
    let l = coef.l;
    match side {
        Side::Inside => {
            let rho = coef.k * spec.refractive_index * r;
            Ok(coef.eta * crate::bessel::bessel_basis(l, BesselKind::J, rho)?)
        }
        Side::Outside => {
            let rho = coef.k * r;
            let j = crate::bessel::bessel_basis(l, BesselKind::J, rho)?;
            let y = crate::bessel::bessel_basis(l, BesselKind::Y, rho)?;
            Ok(coef.alpha * j + coef.beta * y)
        }
    }
}

/// The two quantities continuity acts on: `sqrt(eps) Z` (tangential H) and
/// `d(r Z)/dr / sqrt(eps)` (tangential E), both up to common factors.
pub fn matched_quantities(
    spec: &ResonatorSpec,
    coef: &ModeCoefficients,
    r: f64,
    side: Side,
) -> Result<(Complex64, Complex64)> {
    let l = coef.l;
    match side {
        Side::Inside => {
            let n = spec.refractive_index;
            let (j, dpsi) = value_and_riccati_derivative(l, BesselKind::J, coef.k * n * r)?;
            Ok((coef.eta * j * n, coef.eta * dpsi / n))
        }
        Side::Outside => {
            let rho = coef.k * r;
            let (j, dj) = value_and_riccati_derivative(l, BesselKind::J, rho)?;
            let (y, dy) = value_and_riccati_derivative(l, BesselKind::Y, rho)?;
            Ok((coef.alpha * j + coef.beta * y, coef.alpha * dj + coef.beta * dy))
        }
    }
}

/// Relative mismatch of the two matched quantities across `r = a`.
pub fn continuity_residual(spec: &ResonatorSpec, coef: &ModeCoefficients) -> Result<(f64, f64)> {
    let (h_in, e_in) = matched_quantities(spec, coef, spec.radius, Side::Inside)?;
    let (h_out, e_out) = matched_quantities(spec, coef, spec.radius, Side::Outside)?;
    // scale by the size of the individual outside terms, which may cancel
    let x = coef.k * spec.radius;
    let (j, dj) = value_and_riccati_derivative(coef.l, BesselKind::J, x)?;
    let (y, dy) = value_and_riccati_derivative(coef.l, BesselKind::Y, x)?;
    let h_scale = h_in.norm().max((coef.alpha * j).norm()).max((coef.beta * y).norm());
    let e_scale = e_in.norm().max((coef.alpha * dj).norm()).max((coef.beta * dy).norm());
    Ok(((h_in - h_out).norm() / h_scale, (e_in - e_out).norm() / e_scale))
}

/// `Z_l(k, r)`; with `with_norm` divided by `sqrt(I_M(k))` where
/// `I_M = (alpha + i beta)(alpha - i beta) / (2 k^2)` is the reduced norm.
pub fn radial_z(spec: &ResonatorSpec, l: usize, z: Complex64, r: f64, with_norm: bool) -> Result<Complex64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {r}")));
    }
    let coef = match_interface(spec, l, z)?;
    let side = if r < spec.radius { Side::Inside } else { Side::Outside };
    let value = if r == 0.0 { Complex64::new(0.0, 0.0) } else { radial_branch(spec, &coef, r, side)? };
    if !with_norm {
        return Ok(value);
    }
    let plus = incoming_coefficient(spec, l, z)?;
    let minus = outgoing_coefficient(spec, l, z)?;
    if plus.norm() <= 1e-10 * minus.norm() {
        return Err(Error::PoleEvaluation(z));
    }
    let norm = plus * minus / (z * z * 2.0);
    Ok(value / norm.sqrt())
}

/// Reduced normalisation `(alpha^2 + beta^2) / (2 k^2)` at real `k > 0`.
pub fn mode_norm_im(spec: &ResonatorSpec, l: usize, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    let c = match_interface(spec, l, Complex64::new(k, 0.0))?;
    Ok((c.alpha.re * c.alpha.re + c.beta.re * c.beta.re) / (2.0 * k * k))
}

/// Partial-wave sum of the TM scattering cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    /// `k^-2 sum_l (2l+1) |beta/(alpha+i beta)|^2` in µm^2.
    pub sigma: f64,
    /// Contribution of the `l_max` term relative to the sum.
    pub last_term_fraction: f64,
}

fn partial_cross_section(spec: &ResonatorSpec, l: usize, k: f64) -> Result<f64> {
    let c = match_interface(spec, l, Complex64::new(k, 0.0))?;
    let (a, b) = (c.alpha.re, c.beta.re);
    let d = a * a + b * b;
    Ok((2 * l + 1) as f64 * b * b / d / (k * k))
}

pub fn scattering_cross_section(spec: &ResonatorSpec, k: f64, l_max: usize) -> Result<CrossSection> {
    if !(k > 0.0) || l_max < 1 {
        return Err(Error::InvalidInput(format!("need k > 0 and l_max >= 1, got k = {k}, l_max = {l_max}")));
    }
    let mut sigma = 0.0;
    let mut last = 0.0;
    for l in 1..=l_max {
        last = partial_cross_section(spec, l, k)?;
        sigma += last;
    }
    let last_term_fraction = if sigma > 0.0 { last / sigma } else { 0.0 };
    Ok(CrossSection { sigma, last_term_fraction })
}

/// One row of a spectrum scan. `l = None` marks the summed row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub l: Option<usize>,
    pub k: f64,
    pub im_reduced: f64,
    pub inv_im: f64,
    /// Cross-section summed over orders up to and including `l`.
    pub sigma_s_partial: f64,
}

/// Per-l and summed `1/I_M` and partial cross-sections over a k grid.
pub fn spectrum_scan(spec: &ResonatorSpec, l_max: usize, ks: &[f64]) -> Result<Vec<SpectrumRow>> {
    let per_k: Vec<Result<Vec<SpectrumRow>>> = ks
        .par_iter()
        .map(|&k| {
            let mut rows = Vec::with_capacity(l_max + 1);
            let (mut inv_total, mut sigma) = (0.0, 0.0);
            for l in 1..=l_max {
                let im = mode_norm_im(spec, l, k)?;
                sigma += partial_cross_section(spec, l, k)?;
                inv_total += 1.0 / im;
                rows.push(SpectrumRow { l: Some(l), k, im_reduced: im, inv_im: 1.0 / im, sigma_s_partial: sigma });
            }
            rows.push(SpectrumRow { l: None, k, im_reduced: 1.0 / inv_total, inv_im: inv_total, sigma_s_partial: sigma });
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_k {
        out.extend(rows?);
    }
    Ok(out)
}

pub fn write_spectrum_csv<W: Write>(mut w: W, rows: &[SpectrumRow]) -> std::io::Result<()> {
    writeln!(w, "l,k,IM_reduced,inv_IM,sigma_s_partial")?;
    for r in rows {
        let l = r.l.map_or_else(|| "total".to_string(), |l| l.to_string());
        writeln!(w, "{},{:.10e},{:.10e},{:.10e},{:.10e}", l, r.k, r.im_reduced, r.inv_im, r.sigma_s_partial)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn si() -> ResonatorSpec {
        ResonatorSpec::silicon_microsphere()
    }

    #[test]
    fn rejects_bad_specs_and_l0() {
        assert!(ResonatorSpec::new(0.0, 2.0).is_err());
        assert!(ResonatorSpec::new(1.0, 0.5).is_err());
        assert!(match_interface(&si(), 0, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn uniform_medium_does_not_scatter() {
        let vac = ResonatorSpec::new(1.0, 1.0).unwrap();
        for l in [1, 4, 9] {
            for k in [0.3, 2.0, 7.5] {
                let c = match_interface(&vac, l, Complex64::new(k, 0.0)).unwrap();
                assert!((c.alpha - c.eta).norm() < 1e-12);
                assert!(c.beta.norm() < 1e-12);
                assert!((mode_norm_im(&vac, l, k).unwrap() - 0.5 / (k * k)).abs() < 1e-12 / (k * k));
            }
            assert_eq!(scattering_cross_section(&vac, 1.3, 10).unwrap().sigma, 0.0);
        }
    }

    #[test]
    fn hankel_forms_match_direct_coefficients() {
        for l in [1, 5, 8, 20] {
            for z in [Complex64::new(3.65, 0.0), Complex64::new(2.0, -0.3), Complex64::new(11.0, 0.4)] {
                let c = match_interface(&si(), l, z).unwrap();
                let i = Complex64::i();
                let plus = incoming_coefficient(&si(), l, z).unwrap();
                let minus = outgoing_coefficient(&si(), l, z).unwrap();
                let scale = c.alpha.norm() + c.beta.norm();
                assert!((plus - (c.alpha + i * c.beta)).norm() < 1e-11 * scale);
                assert!((minus - (c.alpha - i * c.beta)).norm() < 1e-11 * scale);
            }
        }
    }

    #[test]
    fn radial_function_regular_at_origin() {
        let v = radial_z(&si(), 5, Complex64::new(3.0, 0.0), 0.0, false).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        let a = radial_z(&si(), 5, Complex64::new(3.0, 0.0), 1e-4, true).unwrap();
        let b = radial_z(&si(), 5, Complex64::new(3.0, 0.0), 2e-4, true).unwrap();
        assert!((b / a - 32.0).norm() < 1e-5);
    }

    #[test]
    fn spectrum_rows_have_total() {
        let rows = spectrum_scan(&si(), 3, &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[3].l, None);
        let sum: f64 = rows[..3].iter().map(|r| r.inv_im).sum();
        assert!((rows[3].inv_im - sum).abs() < 1e-12 * sum);
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("l,k,IM_reduced,inv_IM,sigma_s_partial\n1,"));
        assert!(text.contains("\ntotal,"));
    }
}
