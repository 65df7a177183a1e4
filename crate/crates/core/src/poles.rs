//! Natural-mode poles: zeros of `alpha_l + i beta_l` in the fourth quadrant.
//!
//! Poles are refined by Newton's method from seed grids and certified complete
//! by an argument-principle count over each search rectangle.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mie::{incoming_coefficient, mode_norm_im, ResonatorSpec};

/// Left edge of every search rectangle. Even orders have purely imaginary
/// zeros on `Re z = 0`; those are not fourth-quadrant poles.
pub const RE_MIN: f64 = 0.01;
/// Top edge of every search rectangle; the upper half-plane is zero-free.
pub const IM_TOP: f64 = 0.5;
/// Depth reproducing the 613-pole census for `l <= 30`, `Re z < 20`.
pub const CALIBRATED_IM_MIN: f64 = -16.16;

/// Seed-grid density; the completeness certificate fills any gaps it leaves.
pub const DEFAULT_SEED_DENSITY: f64 = 0.35;

const MAX_NEWTON: usize = 100;
const DEDUP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub l: usize,
    pub n: usize,
    pub z: Complex64,
}

impl Pole {
    pub fn omega(&self) -> f64 {
        self.z.re
    }

    /// Half-width `-Im z`.
    pub fn gamma(&self) -> f64 {
        -self.z.im
    }
}

/// Closed rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_lo && z.re < self.re_hi && z.im > self.im_lo && z.im < self.im_hi
    }

    fn split(&self) -> (Rect, Rect) {
        // off-centre so a zero sitting at the exact midpoint cannot block both halves
        let f = 0.5 + 0.0137;
        if self.re_hi - self.re_lo >= self.im_hi - self.im_lo {
            let m = self.re_lo + f * (self.re_hi - self.re_lo);
            (Rect { re_hi: m, ..*self }, Rect { re_lo: m, ..*self })
        } else {
            let m = self.im_lo + f * (self.im_hi - self.im_lo);
            (Rect { im_hi: m, ..*self }, Rect { im_lo: m, ..*self })
        }
    }
}

/// Search window shared by all orders `1..=l_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoleWindow {
    pub l_max: usize,
    pub re_max: f64,
    pub im_min: f64,
}

impl Default for PoleWindow {
    fn default() -> Self {
        PoleWindow { l_max: 30, re_max: 20.0, im_min: CALIBRATED_IM_MIN }
    }
}

impl PoleWindow {
    pub fn rect(&self) -> Rect {
        Rect { re_lo: RE_MIN, re_hi: self.re_max, im_lo: self.im_min, im_hi: IM_TOP }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 || !(self.re_max > RE_MIN) || !(self.im_min < 0.0) {
            return Err(Error::InvalidInput(format!("empty pole window {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub resonator: ResonatorSpec,
    pub window: PoleWindow,
    pub poles: Vec<Pole>,
}

impl PoleSet {
    pub fn find(&self, l: usize, n: usize) -> Option<&Pole> {
        self.poles.iter().find(|p| p.l == l && p.n == n)
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

/// Central-difference derivative of `alpha + i beta`, step `1e-7 max(1, |z|)`.
pub fn incoming_derivative(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<Complex64> {
    let h = 1e-7 * z.norm().max(1.0);
    let fp = incoming_coefficient(spec, l, z + h)?;
    let fm = incoming_coefficient(spec, l, z - h)?;
    Ok((fp - fm) / (2.0 * h))
}

/// `|f(z)| / (|f'(z)| |z|)`.
pub fn scaled_residual(spec: &ResonatorSpec, l: usize, z: Complex64) -> Result<f64> {
    let f = incoming_coefficient(spec, l, z)?;
    let df = incoming_derivative(spec, l, z)?;
    Ok(f.norm() / (df.norm() * z.norm()))
}

/// Newton iteration from `seed`; `n` of the result is 0 until sorted.
pub fn refine_pole(spec: &ResonatorSpec, l: usize, seed: Complex64) -> Result<Pole> {
    refine_with_limit(spec, l, seed, MAX_NEWTON)
}

fn refine_with_limit(spec: &ResonatorSpec, l: usize, seed: Complex64, max_iter: usize) -> Result<Pole> {
    let mut z = seed;
    let mut converged_at = None;
    for it in 0..max_iter {
        let f = incoming_coefficient(spec, l, z)?;
        let df = incoming_derivative(spec, l, z)?;
        let mut dz = f / df;
        if !dz.is_finite() {
            return Err(Error::NoConvergence(it));
        }
        let cap = 0.5 * z.norm().max(1.0);
        if dz.norm() > cap {
            dz *= cap / dz.norm();
        }
        z -= dz;
        if z.im > 2.0 * IM_TOP || z.norm() > 1e4 {
            return Err(Error::NoConvergence(it));
        }
        match converged_at {
            // two extra steps settle the tiny imaginary parts of near-real poles
            Some(c) if it >= c + 2 => break,
            Some(_) => {}
            None if dz.norm() <= 1e-14 * z.norm().max(1.0) => converged_at = Some(it),
            None => {}
        }
        if it + 1 == max_iter {
            return Err(Error::NoConvergence(max_iter));
        }
    }
    if converged_at.is_none() {
        return Err(Error::NoConvergence(max_iter));
    }
    if !(z.re > 0.0 && z.im < 0.0) {
        return Err(Error::OutsideFourthQuadrant(z));
    }
    Ok(Pole { l, n: 0, z })
}

fn arg_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Winding number of `alpha_l + i beta_l` around `rect`.
pub fn count_zeros(spec: &ResonatorSpec, l: usize, rect: Rect) -> Result<i64> {
    if !(rect.re_hi > rect.re_lo) || !(rect.im_hi > rect.im_lo) {
        return Ok(0);
    }
    let corners = [
        Complex64::new(rect.re_lo, rect.im_lo),
        Complex64::new(rect.re_hi, rect.im_lo),
        Complex64::new(rect.re_hi, rect.im_hi),
        Complex64::new(rect.re_lo, rect.im_hi),
    ];
    let f = |z: Complex64| incoming_coefficient(spec, l, z);
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        total += edge_phase(&f, a, b)?;
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.05 {
        return Err(Error::BoundaryZero(corners[0]));
    }
    Ok(rounded as i64)
}

fn edge_phase<F: Fn(Complex64) -> Result<Complex64>>(f: &F, a: Complex64, b: Complex64) -> Result<f64> {
    let len = (b - a).norm();
    let n0 = ((len / 0.04).ceil() as usize).max(16);
    let mut total = 0.0;
    let mut prev_z = a;
    let mut prev_f = f(a)?;
    for i in 1..=n0 {
        let z = a + (b - a) * (i as f64 / n0 as f64);
        let fz = f(z)?;
        total += refine_segment(f, prev_z, prev_f, z, fz, 0)?;
        prev_z = z;
        prev_f = fz;
    }
    Ok(total)
}

fn refine_segment<F: Fn(Complex64) -> Result<Complex64>>(
    f: &F,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = arg_step(fa, fb);
    if d.abs() <= std::f64::consts::FRAC_PI_4 {
        return Ok(d);
    }
    if depth >= 48 || (zb - za).norm() < 1e-13 * za.norm().max(1.0) {
        if d.abs() < std::f64::consts::FRAC_PI_2 {
            return Ok(d);
        }
        return Err(Error::BoundaryZero(za));
    }
    let zm = (za + zb) * 0.5;
    let fm = f(zm)?;
    Ok(refine_segment(f, za, fa, zm, fm, depth + 1)? + refine_segment(f, zm, fm, zb, fb, depth + 1)?)
}

fn push_unique(found: &mut Vec<Complex64>, z: Complex64) {
    if !found.iter().any(|w| (w - z).norm() < DEDUP) {
        found.push(z);
    }
}

/// Seeds: peaks of `1/I_M` on the real axis pushed slightly below it, plus a
/// uniform grid over the rectangle (`density` scales the spacing).
fn seeds(spec: &ResonatorSpec, l: usize, rect: Rect, density: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    let dk = 0.005 / density;
    let nk = ((rect.re_hi - rect.re_lo) / dk).ceil() as usize;
    let ks: Vec<f64> = (0..=nk).map(|i| rect.re_lo + i as f64 * dk).collect();
    let inv: Vec<f64> = ks.iter().map(|&k| mode_norm_im(spec, l, k).map(|v| 1.0 / v).unwrap_or(0.0)).collect();
    for i in 1..inv.len().saturating_sub(1) {
        if inv[i] > inv[i - 1] && inv[i] >= inv[i + 1] {
            out.push(Complex64::new(ks[i], -1e-3));
        }
    }
    let dre = 0.15 / density;
    let nre = ((rect.re_hi - rect.re_lo) / dre).ceil() as usize;
    let mut ims = vec![-1e-3, -1e-2, -0.05];
    let mut v: f64 = -0.15;
    while v > rect.im_lo {
        ims.push(v);
        v -= 0.35 / density;
    }
    ims.push(rect.im_lo + 0.05);
    for i in 0..=nre {
        let re = rect.re_lo + (i as f64 + 0.5) * dre;
        for &im in &ims {
            out.push(Complex64::new(re, im));
        }
    }
    out
}

fn newton_from(spec: &ResonatorSpec, l: usize, seeds: &[Complex64], rect: Rect) -> Vec<Complex64> {
    let mut found = Vec::new();
    let hits: Vec<Option<Complex64>> = seeds
        .par_iter()
        .map(|&s| refine_with_limit(spec, l, s, 60).ok().map(|p| p.z).filter(|z| rect.contains(*z)))
        .collect();
    for z in hits.into_iter().flatten() {
        push_unique(&mut found, z);
    }
    found
}

/// All poles of order `l` inside `rect`, certified by the argument principle.
pub fn poles_in_rect(spec: &ResonatorSpec, l: usize, rect: Rect, density: f64) -> Result<Vec<Complex64>> {
    let mut found = newton_from(spec, l, &seeds(spec, l, rect, density), rect);
    certify(spec, l, rect, &mut found, 0)?;
    found.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(found)
}

fn count_robust(spec: &ResonatorSpec, l: usize, rect: Rect) -> Result<(i64, Rect)> {
    let mut r = rect;
    for attempt in 0..6 {
        match count_zeros(spec, l, r) {
            Ok(c) => return Ok((c, r)),
            Err(Error::BoundaryZero(_)) if attempt < 5 => {
                // nudge the interior edges only; the window's own edges stay put
                let nudge = 1e-7 * (attempt + 1) as f64;
                r.re_lo += if rect.re_lo > RE_MIN { nudge } else { 0.0 };
                r.im_lo -= nudge;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn certify(spec: &ResonatorSpec, l: usize, rect: Rect, found: &mut Vec<Complex64>, depth: usize) -> Result<()> {
    let (counted, rect) = count_robust(spec, l, rect)?;
    let inside = found.iter().filter(|z| rect.contains(**z)).count();
    if counted == inside as i64 {
        return Ok(());
    }
    if counted > inside as i64 && depth >= 3 {
        // dense local search before splitting further
        let mut local = Vec::new();
        let (nre, nim) = (12, 12);
        for i in 0..nre {
            for j in 0..nim {
                local.push(Complex64::new(
                    rect.re_lo + (i as f64 + 0.5) / nre as f64 * (rect.re_hi - rect.re_lo),
                    rect.im_lo + (j as f64 + 0.5) / nim as f64 * (rect.im_hi - rect.im_lo),
                ));
            }
        }
        for z in newton_from(spec, l, &local, rect) {
            push_unique(found, z);
        }
        let inside = found.iter().filter(|z| rect.contains(**z)).count();
        if counted == inside as i64 {
            return Ok(());
        }
    }
    if depth >= 14 {
        let inside = found.iter().filter(|z| rect.contains(**z)).count();
        return Err(Error::Completeness {
            l,
            re_lo: rect.re_lo,
            re_hi: rect.re_hi,
            im_lo: rect.im_lo,
            im_hi: rect.im_hi,
            counted,
            found: inside,
        });
    }
    let (a, b) = rect.split();
    certify(spec, l, a, found, depth + 1)?;
    certify(spec, l, b, found, depth + 1)
}

/// Every fourth-quadrant pole with `l <= l_max` inside the window, sorted by
/// `(l, Re z)` and labelled `n = 1, 2, ...` within each order.
pub fn enumerate_poles(spec: &ResonatorSpec, window: PoleWindow) -> Result<PoleSet> {
    enumerate_with_density(spec, window, DEFAULT_SEED_DENSITY)
}

pub fn enumerate_with_density(spec: &ResonatorSpec, window: PoleWindow, density: f64) -> Result<PoleSet> {
    spec.validate()?;
    window.validate()?;
    let rect = window.rect();
    let per_l: Vec<Result<Vec<Complex64>>> =
        (1..=window.l_max).into_par_iter().map(|l| poles_in_rect(spec, l, rect, density)).collect();
    let mut poles = Vec::new();
    for (i, zs) in per_l.into_iter().enumerate() {
        for (n, z) in zs?.into_iter().enumerate() {
            poles.push(Pole { l: i + 1, n: n + 1, z });
        }
    }
    Ok(PoleSet { resonator: *spec, window, poles })
}

#[derive(Serialize)]
struct CatalogEntry {
    l: usize,
    n: usize,
    re_z: f64,
    im_z: f64,
    residual: f64,
}

fn catalog(set: &PoleSet) -> Result<Vec<CatalogEntry>> {
    set.poles
        .iter()
        .map(|p| {
            Ok(CatalogEntry { l: p.l, n: p.n, re_z: p.z.re, im_z: p.z.im, residual: scaled_residual(&set.resonator, p.l, p.z)? })
        })
        .collect()
}

pub fn write_catalog_json<W: Write>(w: W, set: &PoleSet) -> Result<()> {
    serde_json::to_writer_pretty(w, &catalog(set)?)?;
    Ok(())
}

pub fn write_catalog_csv<W: Write>(mut w: W, set: &PoleSet) -> Result<()> {
    writeln!(w, "l,n,re_z,im_z,residual")?;
    for e in catalog(set)? {
        writeln!(w, "{},{},{:.16e},{:.16e},{:.3e}", e.l, e.n, e.re_z, e.im_z, e.residual)?;
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
    fn degenerate_rectangle_counts_zero() {
        let r = Rect { re_lo: 1.0, re_hi: 1.0, im_lo: -1.0, im_hi: 0.0 };
        assert_eq!(count_zeros(&si(), 8, r).unwrap(), 0);
    }

    #[test]
    fn upper_half_plane_is_zero_free() {
        let r = Rect { re_lo: 0.1, re_hi: 20.0, im_lo: 0.1, im_hi: 1.0 };
        assert_eq!(count_zeros(&si(), 8, r).unwrap(), 0);
    }

    #[test]
    fn far_seed_fails_cleanly() {
        let r = refine_pole(&si(), 8, Complex64::new(50.0, 50.0));
        assert!(matches!(r, Err(Error::NoConvergence(_)) | Err(Error::OutsideFourthQuadrant(_))));
    }

    #[test]
    fn resonance_pair_near_1_72_um() {
        let p83 = refine_pole(&si(), 8, Complex64::new(3.653, -0.001)).unwrap();
        let p54 = refine_pole(&si(), 5, Complex64::new(3.653, -0.001)).unwrap();
        for p in [p83, p54] {
            let lam = 2.0 * std::f64::consts::PI / p.z.re;
            assert!((lam / 1.72 - 1.0).abs() < 0.01, "{p:?}");
            assert!(scaled_residual(&si(), p.l, p.z).unwrap() < 1e-12);
        }
        assert!(p54.gamma() > p83.gamma());
    }

    #[test]
    fn catalog_formats() {
        let set = PoleSet {
            resonator: si(),
            window: PoleWindow::default(),
            poles: vec![Pole { l: 8, n: 3, z: refine_pole(&si(), 8, Complex64::new(3.66, -1e-3)).unwrap().z }],
        };
        let mut buf = Vec::new();
        write_catalog_csv(&mut buf, &set).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("l,n,re_z,im_z,residual\n8,3,3.66800"));
        let mut buf = Vec::new();
        write_catalog_json(&mut buf, &set).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["n"], 3);
    }
}
