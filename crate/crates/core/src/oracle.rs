//! Brute-force reference: the emitter coupled to the discrete modes of a large
//! spherical box, integrated directly, and direct quadrature of the radial
//! kernel integral compared with its pole expansion.
//!
//! Box modes satisfy `Z_l(k R) = 0` on the outside branch. Writing
//! `alpha + i beta = A exp(-i delta)` and `h1(x) = M exp(i phi)` the outside
//! function is `Z = A M cos(phi(kR) + delta(k))`, so the roots are the
//! crossings of the monotone phase `Theta(k) = phi(kR) + delta(k)` with
//! `pi/2 + m pi`. Mode norms use the exact Lommel integral
//! `int x^2 f_l^2 dx = x^3 (f_l^2 - f_{l-1} f_{l+1}) / 2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{bessel_basis, sequence, BesselKind};
use crate::error::{Error, Result};
use crate::field::DelayConvention;
use crate::mie::{incoming_coefficient, match_interface, radial_z, ResonatorSpec};
use crate::ode::{self, OdeStats, Tolerance};
use crate::poles::{poles_in_rect, Pole, Rect, DEFAULT_SEED_DENSITY, IM_TOP, RE_MIN};
use crate::pseudomode::{pseudomode_radial, radial_kernel, vsh_radial_component, EmitterSpec};

pub const DEFAULT_R_BOX: f64 = 200.0;
pub const DEFAULT_K_MAX: f64 = 25.0;
/// Largest box cutoff accepted.
pub const K_MAX_LIMIT: f64 = 25.0;
/// Smallest box radius, in sphere radii.
pub const MIN_BOX_RATIO: f64 = 100.0;
/// Largest phase step of a resolved scan interval.
const PHASE_STEP: f64 = 0.5;

/// Finite-box spectrum of one angular order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDiscretization {
    pub r_box: f64,
    pub l: usize,
    pub k_modes: Vec<f64>,
    /// Real emitter couplings at box normalisation.
    pub g_modes: Vec<f64>,
    /// Scaled root residual `|Theta(k) - target| / (k dTheta/dk)`, the relative
    /// distance to the exact root.
    pub residuals: Vec<f64>,
}

impl BoxDiscretization {
    pub fn len(&self) -> usize {
        self.k_modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_modes.is_empty()
    }

    /// `sum_j g_j^2 exp(-i k_j tau)`.
    pub fn kernel(&self, tau: f64) -> Complex64 {
        self.k_modes
            .iter()
            .zip(&self.g_modes)
            .map(|(&k, &g)| Complex64::from_polar(g * g, -k * tau))
            .sum()
    }
}

/// `(phi(x) - x)`: phase of `h1(x) exp(-i x)`, smooth in `x`.
fn hankel_phase_offset(l: usize, x: f64) -> Result<Complex64> {
    let h = bessel_basis(l, BesselKind::H1, Complex64::new(x, 0.0))?;
    Ok(h * Complex64::from_polar(1.0, -x))
}

struct PhasePoint {
    k: f64,
    hank: Complex64,
    plus: Complex64,
}

fn phase_point(spec: &ResonatorSpec, l: usize, r_box: f64, k: f64) -> Result<PhasePoint> {
    Ok(PhasePoint {
        k,
        hank: hankel_phase_offset(l, k * r_box)?,
        plus: incoming_coefficient(spec, l, Complex64::new(k, 0.0))?,
    })
}

/// `Theta(b) - Theta(a)` for a step short enough that both phase ratios stay
/// within `(-pi, pi)`.
fn phase_increment(a: &PhasePoint, b: &PhasePoint, r_box: f64) -> f64 {
    (b.hank / a.hank).arg() + (b.k - a.k) * r_box - (b.plus / a.plus).arg()
}

fn resolved(a: &PhasePoint, b: &PhasePoint) -> bool {
    (b.hank / a.hank).arg().abs() < PHASE_STEP && (b.plus / a.plus).arg().abs() < PHASE_STEP
}

/// Scan `(k_lo, k_hi]`, subdividing near narrow resonances, and return the
/// resolved points with their accumulated phase.
fn phase_scan(spec: &ResonatorSpec, l: usize, r_box: f64, k_lo: f64, k_hi: f64) -> Result<Vec<(PhasePoint, f64)>> {
    let step = 0.4 / r_box;
    let n = ((k_hi - k_lo) / step).ceil() as usize;
    let first = phase_point(spec, l, r_box, k_lo)?;
    let theta0 = first.hank.arg() + k_lo * r_box - first.plus.arg();
    let mut out = vec![(first, theta0)];
    for i in 1..=n {
        let k = (k_lo + i as f64 * step).min(k_hi);
        let next = phase_point(spec, l, r_box, k)?;
        let mut stack = vec![next];
        while let Some(b) = stack.pop() {
            let (a, theta) = out.last().unwrap();
            if resolved(a, &b) || b.k - a.k < 1e-15 * b.k {
                let t = theta + phase_increment(a, &b, r_box);
                out.push((b, t));
            } else {
                let mid = phase_point(spec, l, r_box, 0.5 * (a.k + b.k))?;
                stack.push(b);
                stack.push(mid);
            }
        }
    }
    Ok(out)
}

/// Roots of `Z_l(k R)` in `(0, k_max]` with the exact box couplings.
pub fn discretize_box(spec: &ResonatorSpec, emitter: &EmitterSpec, l: usize, r_box: f64, k_max: f64) -> Result<BoxDiscretization> {
    if l == 0 {
        return Err(Error::InvalidInput("l = 0 has no TM mode".into()));
    }
    if !(r_box >= MIN_BOX_RATIO * spec.radius) {
        return Err(Error::InvalidInput(format!("box radius {r_box} below {MIN_BOX_RATIO} sphere radii")));
    }
    if !(k_max > 0.0 && k_max <= K_MAX_LIMIT) {
        return Err(Error::InvalidInput(format!("k_max must be in (0, {K_MAX_LIMIT}], got {k_max}")));
    }
    // below k ~ 1e-3 / R the outside function has no roots for any l >= 1
    let k_lo = 1e-3 / r_box;
    let scan = phase_scan(spec, l, r_box, k_lo, k_max)?;
    let mut k_modes = Vec::new();
    let mut residuals = Vec::new();
    for w in scan.windows(2) {
        let ((a, ta), (b, tb)) = (&w[0], &w[1]);
        let m_lo = ((ta - PI / 2.0) / PI).floor() as i64 + 1;
        let m_hi = ((tb - PI / 2.0) / PI).floor() as i64;
        let slope = (tb - ta) / (b.k - a.k);
        for m in m_lo..=m_hi {
            let target = PI / 2.0 + m as f64 * PI;
            let (mut lo, mut hi) = (a.k, b.k);
            let (mut best, mut miss) = (a.k, f64::INFINITY);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if !(mid > lo && mid < hi) {
                    break;
                }
                let p = phase_point(spec, l, r_box, mid)?;
                let d = ta + phase_increment(a, &p, r_box) - target;
                if d.abs() < miss {
                    (best, miss) = (mid, d.abs());
                }
                if d < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            k_modes.push(best);
            residuals.push(miss / (best * slope));
        }
    }
    check_spacing(&k_modes, r_box, l)?;
    let g_modes = k_modes.par_iter().map(|&k| box_coupling(spec, emitter, l, r_box, k)).collect::<Result<Vec<f64>>>()?;
    Ok(BoxDiscretization { r_box, l, k_modes, g_modes, residuals })
}

/// A spacing more than twice the local average flags a skipped root.
fn check_spacing(k: &[f64], r_box: f64, l: usize) -> Result<()> {
    let gaps: Vec<f64> = k.windows(2).map(|w| w[1] - w[0]).collect();
    for i in 0..gaps.len() {
        if k[i] * r_box < 2.0 * l as f64 + 20.0 {
            continue;
        }
        let lo = i.saturating_sub(5);
        let hi = (i + 6).min(gaps.len());
        let mut local: Vec<f64> = gaps[lo..hi].to_vec();
        local.sort_by(f64::total_cmp);
        let median = local[local.len() / 2];
        if gaps[i] > 2.0 * median.max(PI / r_box) {
            return Err(Error::MissedRoot(k[i]));
        }
    }
    Ok(())
}

/// `x^3 (f_l^2 - f_{l-1} f_{l+1}) / 2` for `f = a j + b y`.
fn lommel(l: usize, x: f64, a: f64, b: f64, regular_only: bool) -> Result<f64> {
    let z = Complex64::new(x, 0.0);
    let j = sequence(l + 1, BesselKind::J, z)?;
    let f: Vec<f64> = if regular_only {
        j.iter().map(|v| a * v.re).collect()
    } else {
        let y = sequence(l + 1, BesselKind::Y, z)?;
        j.iter().zip(&y).map(|(jv, yv)| a * jv.re + b * yv.re).collect()
    };
    Ok(0.5 * x * x * x * (f[l] * f[l] - f[l - 1] * f[l + 1]))
}

/// `int_0^R r^2 eps(r) Z_l(k r)^2 dr`.
pub fn box_norm(spec: &ResonatorSpec, l: usize, r_box: f64, k: f64) -> Result<f64> {
    let c = match_interface(spec, l, Complex64::new(k, 0.0))?;
    let (alpha, beta, eta) = (c.alpha.re, c.beta.re, c.eta.re);
    let n = spec.refractive_index;
    let a = spec.radius;
    let inside = spec.permittivity_inside() * lommel(l, n * k * a, eta, 0.0, true)? / (n * k).powi(3);
    let outside = (lommel(l, k * r_box, alpha, beta, false)? - lommel(l, k * a, alpha, beta, false)?) / k.powi(3);
    Ok(inside + outside)
}

fn box_coupling(spec: &ResonatorSpec, emitter: &EmitterSpec, l: usize, r_box: f64, k: f64) -> Result<f64> {
    let norm = box_norm(spec, l, r_box, k)?;
    let r = emitter.radius;
    let eps = spec.permittivity(r);
    let z = radial_z(spec, l, Complex64::new(k, 0.0), r, false)?.re;
    let ll = (l * (l + 1)) as f64;
    let y0 = vsh_radial_component(l, 0, 0.0)?;
    Ok(emitter.dipole() * ll.sqrt() * y0 * z / (eps * r * (2.0 * k * norm).sqrt()))
}

/// `|Z(k R)| / (|alpha + i beta| |h1(k R)|)`, the root residual against the envelope.
pub fn envelope_residual(spec: &ResonatorSpec, l: usize, r_box: f64, k: f64) -> Result<f64> {
    let c = match_interface(spec, l, Complex64::new(k, 0.0))?;
    let x = Complex64::new(k * r_box, 0.0);
    let j = bessel_basis(l, BesselKind::J, x)?.re;
    let y = bessel_basis(l, BesselKind::Y, x)?.re;
    Ok((c.alpha.re * j + c.beta.re * y).abs() / (c.alpha.re.hypot(c.beta.re) * j.hypot(y)))
}

/// Box spectra for `l = 1..=l_max`, in parallel.
pub fn discretize_all(spec: &ResonatorSpec, emitter: &EmitterSpec, l_max: usize, r_box: f64, k_max: f64) -> Result<Vec<BoxDiscretization>> {
    (1..=l_max).into_par_iter().map(|l| discretize_box(spec, emitter, l, r_box, k_max)).collect()
}

/// Result of a direct box integration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub t: Vec<f64>,
    /// Lab-frame emitter amplitude.
    pub c0: Vec<Complex64>,
    /// `|c0|^2 + sum |c_k|^2`.
    pub probability: Vec<f64>,
    pub modes: usize,
    pub omega0: f64,
    pub stats: OdeStats,
}

impl OracleTrajectory {
    pub fn max_probability_error(&self) -> f64 {
        self.probability.iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max)
    }
}

const CHUNK: usize = 2048;

/// Emitter plus every box mode, integrated in the interaction picture
/// (`c_k` carries `exp(i (k - omega0) t)`) with adaptive steps.
pub fn oracle_evolve(omega0: f64, boxes: &[BoxDiscretization], t: &[f64], tol: Tolerance) -> Result<OracleTrajectory> {
    if let Some(b) = boxes.first() {
        let limit = 2.0 * b.r_box;
        if t.last().is_some_and(|&tm| tm >= limit) || boxes.iter().any(|x| x.r_box != b.r_box) {
            return Err(Error::InvalidInput(format!("times must stay below the box echo at {limit} and boxes must share R")));
        }
    }
    let g: Vec<f64> = boxes.iter().flat_map(|b| b.g_modes.iter().copied()).collect();
    let detuning: Vec<f64> = boxes.iter().flat_map(|b| b.k_modes.iter().map(|&k| omega0 - k)).collect();
    let n = g.len();
    let rhs = |s: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let c0 = y[0];
        let partial: Vec<Complex64> = dy[1..]
            .par_chunks_mut(CHUNK)
            .zip(y[1..].par_chunks(CHUNK))
            .zip(g.par_chunks(CHUNK).zip(detuning.par_chunks(CHUNK)))
            .map(|((d, c), (gs, ds))| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d.len() {
                    let ph = Complex64::from_polar(1.0, ds[i] * s);
                    acc += ph * c[i] * gs[i];
                    d[i] = Complex64::new(0.0, -gs[i]) * ph.conj() * c0;
                }
                acc
            })
            .collect();
        let sum: Complex64 = partial.into_iter().sum();
        dy[0] = -Complex64::i() * sum;
    };
    let mut y0 = vec![Complex64::new(0.0, 0.0); n + 1];
    y0[0] = Complex64::new(1.0, 0.0);
    let (ys, stats) = ode::integrate(rhs, 0.0, &y0, t, tol, 1e-2)?;
    let c0 = ys.iter().zip(t).map(|(y, &s)| y[0] * Complex64::from_polar(1.0, -omega0 * s)).collect();
    let probability = ys.iter().map(|y| y.iter().map(|v| v.norm_sqr()).sum()).collect();
    Ok(OracleTrajectory { t: t.to_vec(), c0, probability, modes: n, omega0, stats })
}

/// Largest `|c0 - c0_ref| / |c0_ref|` over the grid.
pub fn max_relative_error(c0: &[Complex64], reference: &[Complex64]) -> f64 {
    c0.iter().zip(reference).map(|(a, b)| (a - b).norm() / b.norm()).fold(0.0, f64::max)
}

/// Kernel weight `W_l(k; r, r') = Z(k r) Z(k r') / (pi k eps eps' r r' (alpha + i beta)(alpha - i beta))`.
pub fn kernel_weight(spec: &ResonatorSpec, l: usize, k: Complex64, r: f64, r_prime: f64) -> Result<Complex64> {
    let e = spec.permittivity(r) * spec.permittivity(r_prime);
    Ok(radial_kernel(spec, l, k, r, r_prime)? / (k * PI * e * r * r_prime))
}

/// `-2 pi i Res W` at a pole: `v(r) v(r') / (2 pi^2 eps eps' r r' z)`.
pub fn residue_weight(spec: &ResonatorSpec, pole: &Pole, r: f64, r_prime: f64) -> Result<Complex64> {
    let e = spec.permittivity(r) * spec.permittivity(r_prime);
    let v = pseudomode_radial(spec, pole, r)?;
    let vp = if r_prime == r { v } else { pseudomode_radial(spec, pole, r_prime)? };
    Ok(v * vp / (pole.z * 2.0 * PI * PI * e * r * r_prime))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelOptions {
    /// End of the adaptive part of the quadrature.
    pub k_max: f64,
    /// End of the uniform-panel tail `[k_max, k_tail]`.
    pub k_tail: f64,
    /// Poles with `Re z` below this enter the residue sum.
    pub residue_re_max: f64,
    /// Depth of the residue pole search.
    pub residue_im_min: f64,
    /// Accepted truncation estimate beyond `k_tail`, relative to the value.
    pub tail_tol: f64,
    /// Absolute floor for the truncation check, for values near zero.
    pub tail_abs_tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { k_max: 40.0, k_tail: 640.0, residue_re_max: 640.0, residue_im_min: -4.0, tail_tol: 1e-4, tail_abs_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelQuadrature {
    pub value: Complex64,
    /// Quadrature error estimate on `[0, k_tail]`.
    pub error: f64,
    /// Contribution of `[k_max, k_tail]`.
    pub tail: Complex64,
    /// Estimate of the neglected `[k_tail, inf)` part (the `[k_tail/2, k_tail]` contribution).
    pub truncation: f64,
}

/// Both sides of `int_0^inf W_l(k) exp(-i k tau) dk = Theta(tau - D) sum_n R_n exp(-i z_n tau)`
/// for one order `l`.
pub struct KernelIntegrator {
    pub spec: ResonatorSpec,
    pub l: usize,
    pub options: KernelOptions,
    pub poles: Vec<Pole>,
}

impl KernelIntegrator {
    pub fn new(spec: &ResonatorSpec, l: usize, options: KernelOptions) -> Result<Self> {
        let rect = Rect { re_lo: RE_MIN, re_hi: options.residue_re_max, im_lo: options.residue_im_min, im_hi: IM_TOP };
        let zs = poles_in_rect(spec, l, rect, DEFAULT_SEED_DENSITY)?;
        let poles = zs.into_iter().enumerate().map(|(i, z)| Pole { l, n: i + 1, z }).collect();
        Ok(KernelIntegrator { spec: *spec, l, options, poles })
    }

    fn breakpoints(&self, hi: f64) -> Vec<f64> {
        let mut b: Vec<f64> = (0..=((hi / 0.25).ceil() as usize)).map(|i| (i as f64 * 0.25).min(hi)).collect();
        for p in &self.poles {
            if p.z.re < hi && p.gamma() < 0.25 {
                for s in [-1.0, 1.0] {
                    let mut d = p.gamma();
                    while d < 0.25 {
                        let x = p.z.re + s * d;
                        if x > 0.0 && x < hi {
                            b.push(x);
                        }
                        d *= 4.0;
                    }
                }
                b.push(p.z.re);
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, c| (*a - *c).abs() < 1e-300);
        b
    }

    /// Direct quadrature of the kernel integral.
    pub fn quadrature(&self, r: f64, r_prime: f64, tau: f64) -> Result<KernelQuadrature> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
        }
        let (spec, l) = (self.spec, self.l);
        let failed = std::sync::Mutex::new(None);
        let f = |k: f64| -> Complex64 {
            if k <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            match kernel_weight(&spec, l, Complex64::new(k, 0.0), r, r_prime) {
                Ok(w) => w * Complex64::from_polar(1.0, -k * tau),
                Err(e) => {
                    failed.lock().unwrap().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let o = self.options;
        let bp = self.breakpoints(o.k_max);
        let main = crate::quad::integrate(&f, &bp, 1e-15, 1e-11, 200_000);
        let panels = ((o.k_tail - o.k_max) / 0.1).ceil() as usize;
        let mid = 0.5 * o.k_tail;
        let upper = if mid > o.k_max {
            crate::quad::composite(&f, mid, o.k_tail, panels / 2)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let tail = crate::quad::composite(&f, o.k_max, mid.max(o.k_max), panels - panels / 2) + upper;
        if let Some(e) = failed.into_inner().unwrap() {
            return Err(e);
        }
        let value = main.value + tail;
        // with |W| ~ k^-3 the remainder past k_tail is about a third of the last half-interval
        let truncation = upper.norm();
        if truncation > (o.tail_tol * value.norm()).max(o.tail_abs_tol) {
            return Err(Error::TailNotConverged(truncation));
        }
        Ok(KernelQuadrature { value, error: main.error, tail, truncation })
    }

    /// Pole expansion, exactly zero before the delay `(r - a) + (r' - a)`.
    pub fn residue_sum(&self, r: f64, r_prime: f64, tau: f64) -> Result<Complex64> {
        let a = self.spec.radius;
        let delay = DelayConvention::SurfaceSum.delay(a, r_prime, r);
        if tau < delay {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for p in &self.poles {
            sum += residue_weight(&self.spec, p, r, r_prime)? * (-Complex64::i() * p.z * tau).exp();
        }
        Ok(sum)
    }

    /// Half-line trick: `W` is odd on the real axis, so `int_0^K W(k) (-i sin k tau) dk`
    /// is half of the full-line `int_{-K}^K W(k) exp(-i k tau) dk` evaluated with
    /// `W` continued to negative `k`. Returns `(half_line, full_line)`.
    pub fn half_line_check(&self, r: f64, r_prime: f64, tau: f64, k_hi: f64) -> Result<(Complex64, Complex64)> {
        let (spec, l) = (self.spec, self.l);
        let failed = std::sync::Mutex::new(None);
        let w = |k: f64| match kernel_weight(&spec, l, Complex64::new(k, 0.0), r, r_prime) {
            Ok(v) => v,
            Err(e) => {
                failed.lock().unwrap().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        };
        let half = |k: f64| w(k) * Complex64::new(0.0, -(k * tau).sin());
        let full = |k: f64| w(k) * Complex64::from_polar(1.0, -k * tau);
        let panels = (k_hi / 0.05).ceil() as usize;
        // the weight vanishes like k^(2l) at the origin; start just off it
        let lo = 1e-6;
        let h = crate::quad::composite(&half, lo, k_hi, panels);
        let f = crate::quad::composite(&full, lo, k_hi, panels) + crate::quad::composite(&full, -k_hi, -lo, panels);
        if let Some(e) = failed.into_inner().unwrap() {
            return Err(e);
        }
        Ok((h, f))
    }
}

/// Kernel integral `I_l(r, r', tau)` by direct quadrature with default options.
pub fn quadrature_il(spec: &ResonatorSpec, l: usize, r: f64, r_prime: f64, tau: f64) -> Result<KernelQuadrature> {
    KernelIntegrator::new(spec, l, KernelOptions::default())?.quadrature(r, r_prime, tau)
}

/// Per-order comparison of the box kernel with the pseudomode kernel
/// `sum_n gbar_n^2 exp(-i z_n tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelError {
    pub l: usize,
    pub tau: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub max_rel_err_c0: f64,
    pub validity_window: [f64; 2],
    pub r_box: f64,
    pub k_max: f64,
    pub l_max: usize,
    pub box_modes: usize,
    pub max_probability_error: f64,
    pub ode_steps: usize,
    pub per_l_kernel_errors: Vec<KernelError>,
}

/// Times at which the per-order kernels are compared.
pub const KERNEL_TAUS: [f64; 3] = [1.0, 5.0, 20.0];

/// Pseudomode `c0` against the box oracle on `[0, 0.8 * 2 R]`.
pub fn compare_with_pseudomodes(
    set: &crate::pseudomode::PseudomodeSet,
    c0: impl Fn(f64) -> Complex64,
    r_box: f64,
    k_max: f64,
    n_times: usize,
    tol: Tolerance,
) -> Result<(ComparisonReport, OracleTrajectory)> {
    let l_max = set.window.l_max;
    let boxes = discretize_all(&set.resonator, &set.emitter, l_max, r_box, k_max)?;
    let t_end = 0.8 * 2.0 * r_box;
    let t: Vec<f64> = (0..=n_times).map(|i| t_end * i as f64 / n_times as f64).collect();
    let oracle = oracle_evolve(set.emitter.omega0, &boxes, &t, tol)?;
    let reference: Vec<Complex64> = t.iter().map(|&s| c0(s)).collect();
    let mut per_l = Vec::new();
    for b in &boxes {
        for &tau in &KERNEL_TAUS {
            let pm: Complex64 = set
                .modes
                .iter()
                .filter(|m| m.pole.l == b.l)
                .map(|m| m.gbar * m.gbar * (-Complex64::i() * m.pole.z * tau).exp())
                .sum();
            let bx = b.kernel(tau);
            per_l.push(KernelError { l: b.l, tau, rel_err: (pm - bx).norm() / bx.norm() });
        }
    }
    let report = ComparisonReport {
        max_rel_err_c0: max_relative_error(&reference, &oracle.c0),
        validity_window: [0.0, t_end],
        r_box,
        k_max,
        l_max,
        box_modes: oracle.modes,
        max_probability_error: oracle.max_probability_error(),
        ode_steps: oracle.stats.accepted,
        per_l_kernel_errors: per_l,
    };
    Ok((report, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn si() -> ResonatorSpec {
        ResonatorSpec::silicon_microsphere()
    }

    #[test]
    fn free_space_roots_are_evenly_spaced() {
        let spec = ResonatorSpec::new(1.0, 1.0).unwrap();
        let e = EmitterSpec::new(1.0, 10.0, 3.0).unwrap();
        let b = discretize_box(&spec, &e, 1, 200.0, 10.0).unwrap();
        let n = b.len();
        let gap = b.k_modes[n - 1] - b.k_modes[n - 2];
        assert!((gap * 200.0 / PI - 1.0).abs() < 1e-3, "{gap}");
        // free space, l = 1: roots of j_1(kR), tan x = x
        for &k in &b.k_modes[..5] {
            let x = k * 200.0;
            assert!((x.tan() - x).abs() < 1e-6 * x * x, "{x}");
        }
    }

    #[test]
    fn root_count_matches_mode_density() {
        let e = EmitterSpec::new(1.0, 10.0, 3.6).unwrap();
        let b = discretize_box(&si(), &e, 8, 200.0, 20.0).unwrap();
        let expected = 20.0 * 200.0 / PI;
        assert!((b.len() as f64 / expected - 1.0).abs() < 0.02, "{}", b.len());
        assert!(b.residuals.iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn spacing_approaches_pi_over_r() {
        // the sphere adds d(delta)/dk ~ n a to R, so the approach is slow; at
        // R = 1000 blocks of 400 roots (one extra root per resonance) sit within 1%
        let e = EmitterSpec::new(1.0, 10.0, 3.6).unwrap();
        let r_box = 1000.0;
        let b = discretize_box(&si(), &e, 8, r_box, 20.0).unwrap();
        let start = b.k_modes.iter().position(|&k| k > 20.0 / r_box).unwrap();
        for block in b.k_modes[start..].chunks(400).filter(|c| c.len() == 400) {
            let mean = (block[399] - block[0]) / 399.0;
            assert!((mean * r_box / PI - 1.0).abs() < 0.01, "{mean} at {}", block[0]);
        }
    }

    #[test]
    fn lommel_norm_matches_quadrature() {
        let spec = si();
        let (l, r_box, k) = (3, 100.0, 2.345);
        let c = match_interface(&spec, l, Complex64::new(k, 0.0)).unwrap();
        let f = |r: f64| {
            let z = crate::mie::radial_branch(&spec, &c, r, if r < 1.0 { crate::mie::Side::Inside } else { crate::mie::Side::Outside }).unwrap();
            Complex64::new(r * r * spec.permittivity(r) * z.re * z.re, 0.0)
        };
        let q = crate::quad::composite(&f, 0.0, 1.0, 50) + crate::quad::composite(&f, 1.0, r_box, 4000);
        let exact = box_norm(&spec, l, r_box, k).unwrap();
        assert!((q.re - exact).abs() < 1e-10 * exact, "{} vs {exact}", q.re);
    }

    #[test]
    fn zero_dipole_leaves_emitter_untouched() {
        let e = EmitterSpec::new(1.0, 0.0, 3.6).unwrap();
        let b = discretize_box(&si(), &e, 2, 100.0, 5.0).unwrap();
        assert!(b.g_modes.iter().all(|&g| g == 0.0));
        let o = oracle_evolve(3.6, &[b], &[0.0, 10.0, 50.0], Tolerance::default()).unwrap();
        for c in &o.c0 {
            assert!((c.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_small_box_and_large_cutoff() {
        let e = EmitterSpec::new(1.0, 10.0, 3.6).unwrap();
        assert!(discretize_box(&si(), &e, 2, 50.0, 5.0).is_err());
        assert!(discretize_box(&si(), &e, 2, 200.0, 30.0).is_err());
    }

    #[test]
    fn rejects_times_past_the_echo() {
        let e = EmitterSpec::new(1.0, 10.0, 3.6).unwrap();
        let b = discretize_box(&si(), &e, 1, 100.0, 2.0).unwrap();
        assert!(oracle_evolve(3.6, &[b], &[0.0, 250.0], Tolerance::default()).is_err());
    }

    #[test]
    fn kernel_residue_matches_contour() {
        let spec = si();
        let p = crate::poles::refine_pole(&spec, 5, Complex64::new(3.664, -9e-3)).unwrap();
        let rad = 0.4 * p.gamma();
        let n = 64;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let dz = Complex64::from_polar(rad, 2.0 * PI * i as f64 / n as f64);
            s += kernel_weight(&spec, 5, p.z + dz, 1.0, 1.7).unwrap() * dz;
        }
        let numeric = -2.0 * PI * Complex64::i() * s / n as f64;
        let exact = residue_weight(&spec, &p, 1.0, 1.7).unwrap();
        assert!((numeric - exact).norm() < 1e-6 * exact.norm());
    }
}
