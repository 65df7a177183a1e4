//! Emitter plus pseudomode dynamics in the single-excitation sector.
//!
//! The lab-frame amplitudes `a = (c0, b_1, ..., b_N)` obey `i da/dt = M a` with
//! the complex symmetric generator
//!
//! ```text
//! M = [[omega0, gbar^T], [gbar, diag(z)]]
//! ```
//!
//! solved by diagonalising `M = V diag(lambda) V^-1`.

use std::f64::consts::PI;
use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};
use crate::pseudomode::PseudomodeSet;

/// Eigenvector condition number above which the ODE path is used.
pub const CONDITION_LIMIT: f64 = 1e12;

/// How the pseudomode couplings enter the Lamb shift sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambConvention {
    /// `gbar^2 / (omega0 - z)`, the adiabatic limit of the symmetric generator.
    #[default]
    Squared,
    /// `|gbar|^2 / (omega0 - z)`, the adiabatic limit of the Hermitian form.
    AbsSquared,
}

/// Which part of the Lamb shift the transition frequency is tuned against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningPart {
    #[default]
    Real,
    Imaginary,
}

/// Placement of the couplings in the emitter row of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// `M0n = Mn0 = gbar_n`: the residue expansion of the exact kernel.
    #[default]
    Symmetric,
    /// `M0n = conj(gbar_n)`, `Mn0 = gbar_n`: passive by construction.
    Hermitian,
}

pub type ModeLabel = (usize, usize);

/// Complex shift `sum gbar^2 / (omega0 - z)` over every pole not in `excluded`.
pub fn lamb_shift(set: &PseudomodeSet, omega0: f64, excluded: &[ModeLabel], convention: LambConvention) -> Complex64 {
    set.modes
        .iter()
        .filter(|m| !excluded.contains(&(m.pole.l, m.pole.n)))
        .map(|m| {
            let w = match convention {
                LambConvention::AbsSquared => Complex64::new(m.gbar.norm_sqr(), 0.0),
                LambConvention::Squared => m.gbar * m.gbar,
            };
            w / (omega0 - m.pole.z)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub omega0: f64,
    pub shift: Complex64,
    pub iterations: usize,
}

/// Bare frequency whose shifted value `omega0 + part(delta(omega0))` equals the
/// target pole frequency, by fixed-point iteration.
pub fn tune_omega0(
    set: &PseudomodeSet,
    target: ModeLabel,
    excluded: &[ModeLabel],
    convention: LambConvention,
    part: TuningPart,
) -> Result<Tuning> {
    let idx = set
        .index_of(target.0, target.1)
        .ok_or_else(|| Error::InvalidInput(format!("pole {target:?} not in the set")))?;
    let goal = set.modes[idx].pole.omega();
    let pick = |d: Complex64| match part {
        TuningPart::Real => d.re,
        TuningPart::Imaginary => d.im,
    };
    let mut omega0 = goal;
    for it in 1..=50 {
        let shift = lamb_shift(set, omega0, excluded, convention);
        let next = goal - pick(shift);
        if (next - omega0).abs() <= 1e-15 * goal {
            return Ok(Tuning { omega0: next, shift: lamb_shift(set, next, excluded, convention), iterations: it });
        }
        omega0 = next;
    }
    Err(Error::NoConvergence(50))
}

/// Lab-frame generator: `M00 = omega0`, `Mnn = z_n`, `Mn0 = gbar_n` and
/// `M0n = gbar_n` (or its conjugate for the Hermitian form).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGenerator {
    pub omega0: Complex64,
    pub couplings: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub labels: Vec<ModeLabel>,
    pub form: CouplingForm,
}

impl EffectiveGenerator {
    pub fn dim(&self) -> usize {
        1 + self.poles.len()
    }

    pub fn matrix(&self) -> Mat<Complex64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => self.omega0,
            (0, j) => self.row_coupling(j - 1),
            (i, 0) => self.couplings[i - 1],
            (i, j) if i == j => self.poles[i - 1],
            _ => Complex64::new(0.0, 0.0),
        })
    }

    fn row_coupling(&self, k: usize) -> Complex64 {
        match self.form {
            CouplingForm::Symmetric => self.couplings[k],
            CouplingForm::Hermitian => self.couplings[k].conj(),
        }
    }

    /// `M a`.
    pub fn apply(&self, a: &[Complex64], out: &mut [Complex64]) {
        let mut top = self.omega0 * a[0];
        for (k, (&g, &z)) in self.couplings.iter().zip(&self.poles).enumerate() {
            top += self.row_coupling(k) * a[k + 1];
            out[k + 1] = g * a[0] + z * a[k + 1];
        }
        out[0] = top;
    }

    /// Keep only the listed modes, with `omega0` replaced.
    pub fn restricted(&self, keep: &[ModeLabel], omega0: Complex64) -> EffectiveGenerator {
        let idx: Vec<usize> = (0..self.labels.len()).filter(|&i| keep.contains(&self.labels[i])).collect();
        EffectiveGenerator {
            omega0,
            couplings: idx.iter().map(|&i| self.couplings[i]).collect(),
            poles: idx.iter().map(|&i| self.poles[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            form: self.form,
        }
    }
}

pub fn assemble_generator(set: &PseudomodeSet) -> EffectiveGenerator {
    assemble_with_form(set, CouplingForm::Symmetric)
}

pub fn assemble_with_form(set: &PseudomodeSet, form: CouplingForm) -> EffectiveGenerator {
    EffectiveGenerator {
        form,
        omega0: Complex64::new(set.emitter.omega0, 0.0),
        couplings: set.modes.iter().map(|m| m.gbar).collect(),
        poles: set.modes.iter().map(|m| m.pole.z).collect(),
        labels: set.modes.iter().map(|m| (m.pole.l, m.pole.n)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Eigen,
    Ode,
}

/// Diagonalised generator, evaluating `a(t) = V exp(-i Lambda t) V^-1 e_0`.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub generator: EffectiveGenerator,
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvectors, column `j` for `eigenvalues[j]`.
    pub vectors: Mat<Complex64>,
    /// `V^-1 e_0`.
    pub weights: Vec<Complex64>,
    /// `sigma_max / sigma_min` of `V`.
    pub condition: f64,
    /// `||M V - V Lambda|| / ||M||` (Frobenius).
    pub residual: f64,
}

impl Propagator {
    pub fn new(generator: &EffectiveGenerator) -> Result<Propagator> {
        let m = generator.matrix();
        let n = generator.dim();
        let evd = m.eigen().map_err(|e| Error::InvalidInput(format!("eigendecomposition failed: {e:?}")))?;
        let vectors = evd.U().to_owned();
        let eigenvalues: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
        let sv = vectors.singular_values().map_err(|e| Error::InvalidInput(format!("svd failed: {e:?}")))?;
        let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        let lu = vectors.partial_piv_lu();
        let e0 = Mat::from_fn(n, 1, |i, _| if i == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let w = lu.solve(&e0);
        let weights = (0..n).map(|i| w[(i, 0)]).collect();
        let mut res = 0.0;
        for j in 0..n {
            let col: Vec<Complex64> = (0..n).map(|i| vectors[(i, j)]).collect();
            let mut mv = vec![Complex64::new(0.0, 0.0); n];
            generator.apply(&col, &mut mv);
            for i in 0..n {
                res += (mv[i] - col[i] * eigenvalues[j]).norm_sqr();
            }
        }
        let mnorm = m.norm_l2();
        Ok(Propagator { generator: generator.clone(), eigenvalues, vectors, weights, condition, residual: res.sqrt() / mnorm })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(&l, &w)| w * (-Complex64::i() * l * t).exp())
            .collect()
    }

    /// Every lab-frame amplitude at time `t`.
    pub fn amplitudes(&self, t: f64) -> Vec<Complex64> {
        let p = self.phases(t);
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.vectors[(i, j)] * p[j]).sum()).collect()
    }

    /// Every lab-frame amplitude on a time grid, `[mode][time]`.
    pub fn amplitudes_on(&self, t: &[f64]) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let phases = Mat::from_fn(n, t.len(), |j, k| self.weights[j] * (-Complex64::i() * self.eigenvalues[j] * t[k]).exp());
        let a = &self.vectors * &phases;
        (0..n).map(|i| (0..t.len()).map(|k| a[(i, k)]).collect()).collect()
    }

    /// Emitter amplitude only, in `O(dim)`.
    pub fn c0(&self, t: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (&l, &w))| self.vectors[(0, j)] * w * (-Complex64::i() * l * t).exp())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    /// Every amplitude multiplied by `exp(i omega0 t)`.
    Interaction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub c0: Vec<Complex64>,
    /// `b[pole][time]`.
    pub b: Vec<Vec<Complex64>>,
    pub labels: Vec<ModeLabel>,
    pub frame: Frame,
    pub omega0: f64,
    pub path: SolverPath,
    pub condition: f64,
}

impl Trajectory {
    pub fn population(&self) -> Vec<f64> {
        self.c0.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn mode_population(&self, label: ModeLabel) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|&l| l == label)?;
        Some(self.b[i].iter().map(|c| c.norm_sqr()).collect())
    }

    pub fn total_probability(&self) -> Vec<f64> {
        (0..self.t.len())
            .map(|k| self.c0[k].norm_sqr() + self.b.iter().map(|b| b[k].norm_sqr()).sum::<f64>())
            .collect()
    }

    pub fn in_frame(&self, frame: Frame) -> Trajectory {
        if frame == self.frame {
            return self.clone();
        }
        let sign = if frame == Frame::Interaction { 1.0 } else { -1.0 };
        let rot: Vec<Complex64> = self.t.iter().map(|&t| Complex64::from_polar(1.0, sign * self.omega0 * t)).collect();
        let mut out = self.clone();
        out.frame = frame;
        for (c, r) in out.c0.iter_mut().zip(&rot) {
            *c *= r;
        }
        for b in &mut out.b {
            for (c, r) in b.iter_mut().zip(&rot) {
                *c *= r;
            }
        }
        out
    }
}

fn trajectory_from_rows(gen: &EffectiveGenerator, t: &[f64], rows: Vec<Vec<Complex64>>, path: SolverPath, condition: f64) -> Trajectory {
    let npoles = gen.poles.len();
    let c0 = rows.iter().map(|r| r[0]).collect();
    let b = (0..npoles).map(|p| rows.iter().map(|r| r[p + 1]).collect()).collect();
    Trajectory {
        t: t.to_vec(),
        c0,
        b,
        labels: gen.labels.clone(),
        frame: Frame::Lab,
        omega0: gen.omega0.re,
        path,
        condition,
    }
}

fn check_grid(t: &[f64]) -> Result<()> {
    if t.iter().any(|&x| !(x >= 0.0)) || t.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be ascending and non-negative".into()));
    }
    Ok(())
}

/// Lab-frame trajectory from `a(0) = e_0`; falls back to the ODE path when the
/// eigenbasis condition number exceeds [`CONDITION_LIMIT`].
pub fn evolve(gen: &EffectiveGenerator, t: &[f64]) -> Result<Trajectory> {
    check_grid(t)?;
    let prop = Propagator::new(gen)?;
    if prop.condition > CONDITION_LIMIT || !prop.condition.is_finite() {
        return evolve_ode(gen, t, prop.condition, Tolerance::default());
    }
    let mut cols = prop.amplitudes_on(t);
    let b = cols.split_off(1);
    Ok(Trajectory {
        t: t.to_vec(),
        c0: cols.pop().unwrap_or_default(),
        b,
        labels: gen.labels.clone(),
        frame: Frame::Lab,
        omega0: gen.omega0.re,
        path: SolverPath::Eigen,
        condition: prop.condition,
    })
}

/// Direct adaptive integration in the frame rotating at `Re omega0`.
pub fn evolve_ode(gen: &EffectiveGenerator, t: &[f64], condition: f64, tol: Tolerance) -> Result<Trajectory> {
    check_grid(t)?;
    let n = gen.dim();
    let w0 = gen.omega0.re;
    let mut shifted = gen.clone();
    shifted.omega0 -= w0;
    for z in &mut shifted.poles {
        *z -= w0;
    }
    let rhs = |_s: f64, y: &[Complex64], dy: &mut [Complex64]| {
        shifted.apply(y, dy);
        for v in dy.iter_mut() {
            *v *= -Complex64::i();
        }
    };
    let mut y0 = vec![Complex64::new(0.0, 0.0); n];
    y0[0] = Complex64::new(1.0, 0.0);
    let (ys, _) = ode::integrate(rhs, 0.0, &y0, t, tol, 1e-3)?;
    let rows = ys
        .into_iter()
        .zip(t)
        .map(|(y, &s)| {
            let r = Complex64::from_polar(1.0, -w0 * s);
            y.into_iter().map(|v| v * r).collect()
        })
        .collect();
    Ok(trajectory_from_rows(gen, t, rows, SolverPath::Ode, condition))
}

/// Reduced model: the emitter, shifted by the Lamb shift of every other pole,
/// coupled only to the kept poles.
pub fn two_mode_approx(set: &PseudomodeSet, keep: &[ModeLabel], t: &[f64], convention: LambConvention) -> Result<Trajectory> {
    let form = match convention {
        LambConvention::Squared => CouplingForm::Symmetric,
        LambConvention::AbsSquared => CouplingForm::Hermitian,
    };
    for k in keep {
        if set.index_of(k.0, k.1).is_none() {
            return Err(Error::InvalidInput(format!("pole {k:?} not in the set")));
        }
    }
    let full = assemble_with_form(set, form);
    let shift = lamb_shift(set, set.emitter.omega0, keep, convention);
    let gen = full.restricted(keep, full.omega0 + shift);
    let mut traj = evolve(&gen, t)?;
    traj.omega0 = set.emitter.omega0;
    Ok(traj)
}

/// Mean spacing of the minima of an oscillating population. Only minima in the
/// lower half of the population range count, so short-time transients are ignored.
pub fn rabi_period(t: &[f64], pop: &[f64]) -> Result<f64> {
    let w = 3;
    let (lo, hi) = pop.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    let threshold = 0.5 * (lo + hi);
    let mut minima = Vec::new();
    for i in w..pop.len().saturating_sub(w) {
        let window = &pop[i - w..=i + w];
        if pop[i] < threshold && window.iter().all(|&p| pop[i] <= p) && window.iter().any(|&p| pop[i] < p) {
            let (y0, y1, y2) = (pop[i - 1], pop[i], pop[i + 1]);
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let denom = y0 * h1 + y2 * h0 - y1 * (h0 + h1);
            let shift = if denom.abs() > 0.0 && (h0 - h1).abs() < 1e-9 * h0 {
                0.5 * h0 * (y0 - y2) / (y0 - 2.0 * y1 + y2)
            } else {
                0.0
            };
            let tm = t[i] + shift.clamp(-h0, h1);
            if minima.last().is_none_or(|&last: &f64| tm - last > 2.0 * h0) {
                minima.push(tm);
            }
        }
    }
    if minima.len() < 2 {
        let span = t.last().copied().unwrap_or(0.0) - t.first().copied().unwrap_or(0.0);
        return Err(Error::WindowTooShort { span, period: f64::NAN });
    }
    Ok((minima[minima.len() - 1] - minima[0]) / (minima.len() - 1) as f64)
}

/// `0`, then `n_log` points log-spaced on `[t_first, t_switch]`, then `n_lin`
/// points linear on `(t_switch, t_max]`.
pub fn hybrid_time_grid(t_first: f64, t_switch: f64, t_max: f64, n_log: usize, n_lin: usize) -> Result<Vec<f64>> {
    if !(t_first > 0.0 && t_switch > t_first && t_max > t_switch) || n_log < 2 {
        return Err(Error::InvalidInput(format!("bad time grid {t_first} {t_switch} {t_max}")));
    }
    let mut out = vec![0.0];
    let (a, b) = (t_first.ln(), t_switch.ln());
    out.extend((0..n_log).map(|i| (a + (b - a) * i as f64 / (n_log - 1) as f64).exp()));
    out.extend((1..=n_lin).map(|i| t_switch + (t_max - t_switch) * i as f64 / n_lin as f64));
    Ok(out)
}

pub fn linear_time_grid(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// Exponential decay rate of `|c0|^2` from a least-squares fit of the log of
/// its local maxima (or of every point if it does not oscillate) on `window`.
pub fn fit_decay_rate(t: &[f64], pop: &[f64], window: (f64, f64)) -> Result<f64> {
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= window.0 && t[i] <= window.1 && pop[i] > 0.0).collect();
    if idx.len() < 3 {
        return Err(Error::WindowTooShort { span: window.1 - window.0, period: f64::NAN });
    }
    let peaks: Vec<usize> = idx
        .windows(3)
        .filter(|w| pop[w[1]] >= pop[w[0]] && pop[w[1]] >= pop[w[2]])
        .map(|w| w[1])
        .collect();
    let pts = if peaks.len() >= 3 { peaks } else { idx };
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &i| (a + t[i], b + pop[i].ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &i| (a + (t[i] - mx) * (pop[i].ln() - my), b + (t[i] - mx).powi(2)));
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    AdiabaticFollowing,
    FreeRinging,
    StrongCoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleRegime {
    pub l: usize,
    pub n: usize,
    pub gamma_ratio: f64,
    pub adiabatic_residual: f64,
    pub ringing_residual: f64,
    pub regime: Regime,
}

pub const REGIME_THRESHOLD: f64 = 0.2;

/// Label each pole by comparing `b_n(t)` with adiabatic following
/// `gbar c0 / (omega0 - z)` over `window` and with free ringing
/// `A exp(-i z t)` over the later half of `window`. Requires a lab-frame trajectory.
pub fn classify_markovianity(
    traj: &Trajectory,
    set: &PseudomodeSet,
    gamma0: f64,
    window: (f64, f64),
) -> Result<Vec<PoleRegime>> {
    let traj = traj.in_frame(Frame::Lab);
    if let Ok(period) = rabi_period(&traj.t, &traj.population()) {
        if window.1 - window.0 < 3.0 * period {
            return Err(Error::WindowTooShort { span: window.1 - window.0, period });
        }
    }
    let idx: Vec<usize> = (0..traj.t.len()).filter(|&i| traj.t[i] >= window.0 && traj.t[i] <= window.1).collect();
    let mid = 0.5 * (window.0 + window.1);
    let late: Vec<usize> = idx.iter().copied().filter(|&i| traj.t[i] >= mid).collect();
    if late.len() < 2 {
        return Err(Error::WindowTooShort { span: window.1 - window.0, period: f64::NAN });
    }
    let omega0 = traj.omega0;
    traj.labels
        .iter()
        .enumerate()
        .map(|(p, &(l, n))| {
            let m = set.modes[set.index_of(l, n).ok_or_else(|| Error::InvalidInput(format!("pole {:?} missing", (l, n))))?];
            let b = &traj.b[p];
            let z = m.pole.z;
            let follow = m.gbar / (omega0 - z);
            let (mut num, mut den) = (0.0, 0.0);
            for &i in &idx {
                num += (b[i] - follow * traj.c0[i]).norm_sqr();
                den += b[i].norm_sqr();
            }
            let adiabatic_residual = if den > 0.0 { (num / den).sqrt() } else { f64::INFINITY };
            let basis: Vec<Complex64> = late.iter().map(|&i| (-Complex64::i() * z * (traj.t[i] - mid)).exp()).collect();
            let (mut proj, mut norm) = (Complex64::new(0.0, 0.0), 0.0);
            for (k, &i) in late.iter().enumerate() {
                proj += b[i] * basis[k].conj();
                norm += basis[k].norm_sqr();
            }
            let amp = proj / norm;
            let (mut rn, mut rd) = (0.0, 0.0);
            for (k, &i) in late.iter().enumerate() {
                rn += (b[i] - amp * basis[k]).norm_sqr();
                rd += b[i].norm_sqr();
            }
            let ringing_residual = if rd > 0.0 { (rn / rd).sqrt() } else { f64::INFINITY };
            let regime = if adiabatic_residual < REGIME_THRESHOLD {
                Regime::AdiabaticFollowing
            } else if ringing_residual < REGIME_THRESHOLD {
                Regime::FreeRinging
            } else {
                Regime::StrongCoupled
            };
            Ok(PoleRegime { l, n, gamma_ratio: m.pole.gamma() / gamma0, adiabatic_residual, ringing_residual, regime })
        })
        .collect()
}

/// `ct,abs2_c0,abs2_b_l_n...` for the listed modes (every mode if `modes` is `None`).
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, modes: Option<&[ModeLabel]>) -> std::io::Result<()> {
    let cols: Vec<usize> = match modes {
        None => (0..traj.labels.len()).collect(),
        Some(sel) => sel.iter().filter_map(|m| traj.labels.iter().position(|l| l == m)).collect(),
    };
    write!(w, "ct,abs2_c0")?;
    for &c in &cols {
        write!(w, ",abs2_b_{}_{}", traj.labels[c].0, traj.labels[c].1)?;
    }
    writeln!(w)?;
    for k in 0..traj.t.len() {
        write!(w, "{:.10e},{:.10e}", traj.t[k], traj.c0[k].norm_sqr())?;
        for &c in &cols {
            write!(w, ",{:.6e}", traj.b[c][k].norm_sqr())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Period `2 pi / |2 g|` of resonant vacuum Rabi oscillations for coupling `g`.
pub fn vacuum_rabi_period(g: Complex64) -> f64 {
    PI / g.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(omega0: f64, g: &[f64], z: &[Complex64]) -> EffectiveGenerator {
        EffectiveGenerator {
            omega0: Complex64::new(omega0, 0.0),
            couplings: g.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            poles: z.to_vec(),
            labels: (1..=z.len()).map(|n| (1, n)).collect(),
            form: CouplingForm::Symmetric,
        }
    }

    #[test]
    fn bare_emitter_only_rotates() {
        let g = gen(2.0, &[], &[]);
        let tr = evolve(&g, &[0.0, 1.0, 100.0]).unwrap();
        for (c, &t) in tr.c0.iter().zip(&tr.t) {
            assert!((c - Complex64::from_polar(1.0, -2.0 * t)).norm() < 1e-13);
        }
    }

    #[test]
    fn vacuum_rabi_splitting() {
        let (w0, w1, g) = (1.0, 1.3, 0.05);
        let p = Propagator::new(&gen(w0, &[g], &[Complex64::new(w1, 0.0)])).unwrap();
        let mut ev: Vec<f64> = p.eigenvalues.iter().map(|e| e.re).collect();
        ev.sort_by(f64::total_cmp);
        let mean = 0.5 * (w0 + w1);
        let split = ((w1 - w0).powi(2) / 4.0 + g * g).sqrt();
        assert!((ev[0] - (mean - split)).abs() < 1e-13);
        assert!((ev[1] - (mean + split)).abs() < 1e-13);
    }

    #[test]
    fn ode_path_matches_eigen_path() {
        let z = [Complex64::new(1.01, -0.02), Complex64::new(0.7, -0.5), Complex64::new(1.3, -1e-4)];
        let g = gen(1.0, &[0.03, 0.1, 0.01], &z);
        let t = linear_time_grid(60.0, 30);
        let a = evolve(&g, &t).unwrap();
        let b = evolve_ode(&g, &t, f64::NAN, Tolerance::default()).unwrap();
        for k in 0..t.len() {
            assert!((a.c0[k] - b.c0[k]).norm() < 1e-8);
        }
        assert_eq!(a.path, SolverPath::Eigen);
    }

    #[test]
    fn single_pole_lamb_shift_is_pure_decay() {
        use crate::pseudomode::{EmitterSpec, Pseudomode, PoleFactors};
        use crate::poles::{Pole, PoleWindow};
        let z = Complex64::new(2.0, -0.1);
        let zero = Complex64::new(0.0, 0.0);
        let set = PseudomodeSet {
            resonator: crate::mie::ResonatorSpec::silicon_microsphere(),
            window: PoleWindow::default(),
            emitter: EmitterSpec::new(1.0, 1.0, 2.0).unwrap(),
            modes: vec![Pseudomode {
                pole: Pole { l: 1, n: 1, z },
                factors: PoleFactors { derivative: zero, outgoing: zero, prefactor: zero },
                gbar: Complex64::new(0.01, 0.0),
            }],
        };
        let d = lamb_shift(&set, 2.0, &[], LambConvention::AbsSquared);
        assert!((d - Complex64::new(0.0, -1e-4 / 0.1)).norm() < 1e-15);
        assert_eq!(lamb_shift(&set.with_dipole(0.0), 2.0, &[], LambConvention::AbsSquared), zero);
    }

    #[test]
    fn rabi_period_of_cosine() {
        let t = linear_time_grid(100.0, 4000);
        let pop: Vec<f64> = t.iter().map(|&s| (0.1 * s).cos().powi(2)).collect();
        let p = rabi_period(&t, &pop).unwrap();
        assert!((p - PI / 0.1).abs() < 1e-3);
    }

    #[test]
    fn rabi_period_ignores_transient_dips() {
        let t = hybrid_time_grid(1e-2, 10.0, 200.0, 50, 4000).unwrap();
        let pop: Vec<f64> = t.iter().map(|&s| (0.1 * s).cos().powi(2) - 1e-7 * (-(s - 0.2f64).powi(2) / 0.01).exp()).collect();
        let p = rabi_period(&t, &pop).unwrap();
        assert!((p - PI / 0.1).abs() < 1e-3, "{p}");
    }

    #[test]
    fn hybrid_grid_is_sorted() {
        let g = hybrid_time_grid(1e-2, 10.0, 1e3, 50, 100).unwrap();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], 0.0);
        assert!((g.last().unwrap() - 1e3).abs() < 1e-9);
    }
}
