//! Explicit Runge–Kutta steppers on flat `f64` state vectors.

use crate::error::{Error, Result};

/// One classical RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &mut [f64], h: f64)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h0: 1e-3, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_h: f64,
}

// Dormand–Prince 5(4) tableau.
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
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrate `y' = f(t, y)` from `t0` to `t1` with Dormand–Prince 5(4)
/// and a standard PI-free step controller.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y: &mut [f64], opts: &AdaptiveOptions) -> Result<AdaptiveStats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut stats = AdaptiveStats::default();
    if t1 == t0 {
        return Ok(stats);
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut h = opts.h0.min(opts.h_max).min((t1 - t0).abs());
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    f(t, y, &mut k[0]);
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Convergence { iterations: opts.max_steps, residual: h, last: vec![t] });
        }
        let last = (t + dir * h - t1) * dir >= 0.0;
        let hs = if last { (t1 - t).abs() } else { h };
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += dir * hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(t + dir * C[s] * hs, &tmp, &mut k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut v5 = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                v5 += dir * hs * B5[s] * k[s][i];
                e += dir * hs * (B5[s] - B4[s]) * k[s][i];
            }
            y5[i] = v5;
            let sc = opts.atol + opts.rtol * y[i].abs().max(v5.abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::Stability(format!("non-finite state near t = {t}")));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + dir * hs };
            y.copy_from_slice(&y5);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            stats.accepted += 1;
            stats.last_h = hs;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs * fac).min(opts.h_max);
        } else {
            stats.rejected += 1;
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::Stability(format!("step size underflow at t = {t}")));
        }
    }
    Ok(stats)
}
