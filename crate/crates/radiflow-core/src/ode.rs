//! Adaptive Dormand-Prince 5(4) integrator for complex-valued systems.
//!
//! Used as an independent reference for the exponential propagators and to
//! integrate the small model problems.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeError {
    StepSizeUnderflow,
    TooManySteps,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 5_000_000;

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each time in
/// `outputs` (which must be non-decreasing and not before `t0`).
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    outputs: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<Complex64>>, OdeError>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); dim]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); dim];
    let mut y5 = vec![Complex64::new(0.0, 0.0); dim];
    let mut out = Vec::with_capacity(outputs.len());
    let mut h = initial_step(&mut f, t0, &y, tol);
    let mut steps = 0;
    f(t, &y, &mut k[0]);
    for &target in outputs {
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(OdeError::TooManySteps);
            }
            let hs = h.min(target - t);
            if hs < 1e-15 * t.abs().max(1.0) && target - t > hs {
                return Err(OdeError::StepSizeUnderflow);
            }
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += kj[i] * (hs * A[s][j]);
                        }
                    }
                    tmp[i] = acc;
                }
                f(t + C[s] * hs, &tmp, &mut k[s]);
            }
            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut s5 = y[i];
                let mut s4 = y[i];
                for s in 0..7 {
                    s5 += k[s][i] * (hs * B5[s]);
                    s4 += k[s][i] * (hs * B4[s]);
                }
                y5[i] = s5;
                let sc = tol.atol + tol.rtol * y[i].norm().max(s5.norm());
                let e = (s5 - s4).norm() / sc;
                err = err.max(e);
            }
            if !err.is_finite() {
                h = hs * 0.1;
                continue;
            }
            if err <= 1.0 {
                t += hs;
                core::mem::swap(&mut y, &mut y5);
                // FSAL: stage 7 was evaluated at the accepted point
                let last = k[6].clone();
                k[0].copy_from_slice(&last);
                let clamped = hs < h;
                if !clamped {
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    h = hs * fac;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).max(0.1);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step<F>(f: &mut F, t0: f64, y: &[Complex64], tol: Tolerances) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    f(t0, y, &mut dy);
    let d0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d1 = dy.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let h = if d0 < 1e-12 || d1 < 1e-12 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(1e-2).max(1e-12) * tol.rtol.powf(0.2).max(1e-3) * 10.0
}
