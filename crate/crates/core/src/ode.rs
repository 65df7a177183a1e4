//! Adaptive Dormand-Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` and return `y` at each of `outputs`
/// (ascending, all `>= t0`). Steps are clipped to land on the output times.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    outputs: &[f64],
    tol: Tolerance,
    h_init: f64,
) -> Result<(Vec<Vec<Complex64>>, OdeStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidInput("output times must be ascending and >= t0".into()));
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = h_init.abs().max(1e-12);
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut out = Vec::with_capacity(outputs.len());
    for &target in outputs {
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * A[s][j];
                        }
                    }
                    stage[i] = y[i] + acc * step;
                }
                f(t + C[s] * step, &stage, &mut k[s]);
                stats.evaluations += 1;
            }
            // stage 6 already holds the fifth-order solution (FSAL)
            y_new.copy_from_slice(&stage);
            // max norm: every component meets the tolerance, however many there are
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                err = f64::max(err, (e * step).norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::StepCollapse(t));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                stats.accepted += 1;
            } else {
                stats.rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let proposal = step * factor;
            if !(last && err <= 1.0) {
                h = proposal;
            } else {
                h = h.max(proposal);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepCollapse(t));
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotating_decaying_scalar() {
        let lam = Complex64::new(-0.3, -2.0);
        let f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = lam * y[0];
        let ts = [0.5, 1.0, 7.0];
        let (ys, stats) = integrate(f, 0.0, &[Complex64::new(1.0, 0.0)], &ts, Tolerance::default(), 0.01).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            let exact = (lam * t).exp();
            assert!((y[0] - exact).norm() < 1e-9, "t={t}");
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn two_level_rabi_conserves_norm() {
        let g = 0.7;
        let f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            let i = Complex64::i();
            dy[0] = -i * g * y[1];
            dy[1] = -i * g * y[0];
        };
        let y0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let (ys, _) = integrate(f, 0.0, &y0, &[10.0], Tolerance { rtol: 1e-12, atol: 1e-12 }, 0.1).unwrap();
        assert!((ys[0][0].norm() - (g * 10.0f64).cos().abs()).abs() < 1e-10);
        assert!((ys[0][0].norm_sqr() + ys[0][1].norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_unsorted_outputs() {
        let f = |_t: f64, _y: &[Complex64], _dy: &mut [Complex64]| {};
        assert!(integrate(f, 0.0, &[Complex64::new(1.0, 0.0)], &[2.0, 1.0], Tolerance::default(), 0.1).is_err());
    }
}
