//! Retarded field reconstruction from pseudomode amplitudes.
//!
//! The positive-frequency field at `(r, theta)` is
//!
//! ```text
//! E(r, t) = i sum_n e_n(r, theta) exp(-i z_n D) b_n(t - D),   t >= D
//! ```
//!
//! with `D = (r - a) + (r_emit - a)`. The growth of `e_n` away from the sphere
//! is cancelled by `exp(-i z_n D)`, so the sum stays regular.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Frame, ModeLabel, Propagator, Trajectory};
use crate::error::{Error, Result};
use crate::pseudomode::{pseudomode_intensity, retarded_mode_field, PseudomodeSet};

/// Which pseudomodes contribute to the field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeFilter {
    #[default]
    All,
    Only(Vec<ModeLabel>),
    Except(Vec<ModeLabel>),
}

impl ModeFilter {
    pub fn admits(&self, label: ModeLabel) -> bool {
        match self {
            ModeFilter::All => true,
            ModeFilter::Only(v) => v.contains(&label),
            ModeFilter::Except(v) => !v.contains(&label),
        }
    }
}

/// Delay between the emitter and a field point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DelayConvention {
    /// `(r - a) + (r_emit - a)`: travel from the emitter to the surface and out.
    #[default]
    SurfaceSum,
    /// `(r - a)` only.
    FieldOnly,
}

impl DelayConvention {
    pub fn delay(&self, a: f64, r_emit: f64, r: f64) -> f64 {
        let field = (r - a).max(0.0);
        match self {
            DelayConvention::SurfaceSum => field + (r_emit - a).max(0.0),
            DelayConvention::FieldOnly => field,
        }
    }
}

/// Source of the pseudomode amplitudes `b_n(s)`.
#[derive(Debug, Clone)]
pub enum AmplitudeSource {
    /// Exact spectral evaluation, valid up to `horizon`.
    Spectral { propagator: Propagator, horizon: f64 },
    /// Cubic interpolation of a sampled trajectory.
    Sampled(Trajectory),
}

impl AmplitudeSource {
    fn horizon(&self) -> f64 {
        match self {
            AmplitudeSource::Spectral { horizon, .. } => *horizon,
            AmplitudeSource::Sampled(tr) => tr.t.last().copied().unwrap_or(0.0),
        }
    }
}

/// Per-point precomputed contraction: `E(t) = sum_j u_j exp(-i lambda_j (t - D))`.
struct SpectralPoint {
    delay: f64,
    u: Vec<[Complex64; 2]>,
}

pub struct FieldReconstructor<'a> {
    pub set: &'a PseudomodeSet,
    pub source: AmplitudeSource,
    pub filter: ModeFilter,
    pub delay: DelayConvention,
    /// Indices into the trajectory / generator mode list, per set mode.
    mode_index: Vec<Option<usize>>,
    omega0: f64,
}

impl<'a> FieldReconstructor<'a> {
    pub fn new(set: &'a PseudomodeSet, source: AmplitudeSource, filter: ModeFilter, delay: DelayConvention) -> Self {
        let (labels, omega0) = match &source {
            AmplitudeSource::Spectral { propagator, .. } => (propagator.generator.labels.clone(), propagator.generator.omega0.re),
            AmplitudeSource::Sampled(tr) => (tr.labels.clone(), tr.omega0),
        };
        let mode_index = set
            .modes
            .iter()
            .map(|m| {
                let lab = (m.pole.l, m.pole.n);
                if filter.admits(lab) {
                    labels.iter().position(|&x| x == lab)
                } else {
                    None
                }
            })
            .collect();
        FieldReconstructor { set, source, filter, delay, mode_index, omega0 }
    }

    pub fn delay_at(&self, r: f64) -> f64 {
        self.delay.delay(self.set.resonator.radius, self.set.emitter.radius, r)
    }

    /// `e_n(r, theta) exp(-i z_n D)` for every contributing mode.
    fn weights(&self, r: f64, theta: f64) -> Result<Vec<(usize, [Complex64; 2])>> {
        let d = self.delay_at(r);
        let mut out = Vec::new();
        for (m, idx) in self.set.modes.iter().zip(&self.mode_index) {
            if let Some(i) = idx {
                out.push((*i, retarded_mode_field(&self.set.resonator, &m.pole, &m.factors, r, theta, d)?));
            }
        }
        Ok(out)
    }

    fn spectral_point(&self, prop: &Propagator, r: f64, theta: f64) -> Result<SpectralPoint> {
        let w = self.weights(r, theta)?;
        let n = prop.dim();
        let mut u = vec![[Complex64::new(0.0, 0.0); 2]; n];
        for (j, uj) in u.iter_mut().enumerate() {
            let mut acc = [Complex64::new(0.0, 0.0); 2];
            for &(i, e) in &w {
                let v = prop.vectors[(i + 1, j)];
                acc[0] += e[0] * v;
                acc[1] += e[1] * v;
            }
            let c = Complex64::i() * prop.weights[j];
            *uj = [acc[0] * c, acc[1] * c];
        }
        Ok(SpectralPoint { delay: self.delay_at(r), u })
    }

    fn check_time(&self, r: f64, t: f64) -> Result<()> {
        if t - self.delay_at(r) > self.source.horizon() * (1.0 + 1e-12) {
            return Err(Error::TrajectoryTooShort { r, t });
        }
        Ok(())
    }

    /// `(E_r, E_theta)` at `(r, theta, t)`; exactly zero for `t < D`.
    pub fn field_amplitude(&self, r: f64, theta: f64, t: f64) -> Result<[Complex64; 2]> {
        self.check_time(r, t)?;
        let d = self.delay_at(r);
        if t < d {
            return Ok([Complex64::new(0.0, 0.0); 2]);
        }
        match &self.source {
            AmplitudeSource::Spectral { propagator, .. } => {
                let p = self.spectral_point(propagator, r, theta)?;
                Ok(evaluate_spectral(propagator, &p, t))
            }
            AmplitudeSource::Sampled(tr) => {
                let w = self.weights(r, theta)?;
                let s = t - d;
                let mut e = [Complex64::new(0.0, 0.0); 2];
                for (i, wi) in w {
                    let b = interpolate(tr, i, s, self.omega0);
                    e[0] += Complex64::i() * wi[0] * b;
                    e[1] += Complex64::i() * wi[1] * b;
                }
                Ok(e)
            }
        }
    }

    pub fn intensity(&self, r: f64, theta: f64, t: f64) -> Result<f64> {
        let e = self.field_amplitude(r, theta, t)?;
        Ok(e[0].norm_sqr() + e[1].norm_sqr())
    }

    /// `|E|^2` on `r_grid x t_grid` at polar angle `theta`.
    pub fn intensity_map(&self, r_grid: &[f64], t_grid: &[f64], theta: f64) -> Result<FieldMap> {
        if r_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("grids must be ascending".into()));
        }
        let rows: Vec<Result<Vec<f64>>> = r_grid
            .par_iter()
            .map(|&r| {
                for &t in t_grid {
                    self.check_time(r, t)?;
                }
                match &self.source {
                    AmplitudeSource::Spectral { propagator, .. } => {
                        let p = self.spectral_point(propagator, r, theta)?;
                        Ok(t_grid
                            .iter()
                            .map(|&t| {
                                if t < p.delay {
                                    0.0
                                } else {
                                    let e = evaluate_spectral(propagator, &p, t);
                                    e[0].norm_sqr() + e[1].norm_sqr()
                                }
                            })
                            .collect())
                    }
                    AmplitudeSource::Sampled(_) => t_grid.iter().map(|&t| self.intensity(r, theta, t)).collect(),
                }
            })
            .collect();
        let intensity = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(FieldMap {
            r: r_grid.to_vec(),
            t: t_grid.to_vec(),
            theta,
            intensity,
            filter: self.filter.clone(),
            delay: self.delay,
        })
    }
}

fn evaluate_spectral(prop: &Propagator, p: &SpectralPoint, t: f64) -> [Complex64; 2] {
    let s = t - p.delay;
    let mut e = [Complex64::new(0.0, 0.0); 2];
    for (u, &l) in p.u.iter().zip(&prop.eigenvalues) {
        let ph = (-Complex64::i() * l * s).exp();
        e[0] += u[0] * ph;
        e[1] += u[1] * ph;
    }
    e
}

/// Catmull-Rom interpolation of `b_i` in the frame rotating at `omega0`,
/// rotated back to the lab frame.
fn interpolate(tr: &Trajectory, i: usize, s: f64, omega0: f64) -> Complex64 {
    let t = &tr.t;
    let rot = |k: usize| -> Complex64 {
        let v = tr.b[i][k];
        match tr.frame {
            Frame::Lab => v * Complex64::from_polar(1.0, omega0 * t[k]),
            Frame::Interaction => v,
        }
    };
    let n = t.len();
    let k = match t.binary_search_by(|x| x.total_cmp(&s)) {
        Ok(k) => return rot(k) * Complex64::from_polar(1.0, -omega0 * s),
        Err(k) => k.clamp(1, n - 1) - 1,
    };
    let h = t[k + 1] - t[k];
    let x = (s - t[k]) / h;
    let (p1, p2) = (rot(k), rot(k + 1));
    let m1 = if k > 0 { (p2 - rot(k - 1)) / (t[k + 1] - t[k - 1]) * h } else { p2 - p1 };
    let m2 = if k + 2 < n { (rot(k + 2) - p1) / (t[k + 2] - t[k]) * h } else { p2 - p1 };
    let (x2, x3) = (x * x, x * x * x);
    let v = p1 * (2.0 * x3 - 3.0 * x2 + 1.0) + m1 * (x3 - 2.0 * x2 + x) + p2 * (-2.0 * x3 + 3.0 * x2) + m2 * (x3 - x2);
    v * Complex64::from_polar(1.0, -omega0 * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub theta: f64,
    /// `intensity[r][t]`.
    pub intensity: Vec<Vec<f64>>,
    pub filter: ModeFilter,
    pub delay: DelayConvention,
}

impl FieldMap {
    pub fn max(&self) -> f64 {
        self.intensity.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> FieldMap {
        let m = self.max();
        let mut out = self.clone();
        if m > 0.0 {
            for v in out.intensity.iter_mut().flatten() {
                *v /= m;
            }
        }
        out
    }

    /// Largest intensity at points with `r - a > t + lead`.
    pub fn max_outside_cone(&self, a: f64, lead: f64) -> f64 {
        let mut m: f64 = 0.0;
        for (i, &r) in self.r.iter().enumerate() {
            for (k, &t) in self.t.iter().enumerate() {
                if r - a > t + lead {
                    m = m.max(self.intensity[i][k]);
                }
            }
        }
        m
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r,ct,intensity")?;
        for (i, &r) in self.r.iter().enumerate() {
            for (k, &t) in self.t.iter().enumerate() {
                writeln!(w, "{r:.8e},{t:.8e},{:.8e}", self.intensity[i][k])?;
            }
        }
        Ok(())
    }

    pub fn metadata(&self, normalized: bool) -> serde_json::Value {
        serde_json::json!({
            "filter": self.filter,
            "delay_convention": self.delay,
            "theta": self.theta,
            "normalized": normalized,
            "max_intensity": self.max(),
            "r_points": self.r.len(),
            "t_points": self.t.len(),
        })
    }
}

/// `|v|^2` of one pseudomode on an `(r, theta)` grid, rows `(r, theta, abs2_v)`.
pub fn pseudomode_portrait(set: &PseudomodeSet, label: ModeLabel, r_grid: &[f64], theta_grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let idx = set.index_of(label.0, label.1).ok_or_else(|| Error::InvalidInput(format!("pole {label:?} not in the set")))?;
    let m = &set.modes[idx];
    let mut out = Vec::with_capacity(r_grid.len() * theta_grid.len());
    for &r in r_grid {
        for &th in theta_grid {
            out.push((r, th, pseudomode_intensity(&set.resonator, &m.pole, &m.factors, r, th)?));
        }
    }
    Ok(out)
}

pub fn write_portrait_csv<W: Write>(mut w: W, rows: &[(f64, f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "r,theta,abs2_v")?;
    for (r, th, v) in rows {
        writeln!(w, "{r:.8e},{th:.8e},{v:.8e}")?;
    }
    Ok(())
}
