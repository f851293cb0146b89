//! Direct periodic solver for `u_t + 6 u u_x + ε² u_xxx = 0`.
//!
//! Fourier pseudospectral in `x`. The dispersive term is removed by the
//! exact integrating factor, and the remaining nonlinear flow is integrated
//! with adaptive Dormand–Prince 5(4) on the Fourier coefficients. The
//! quadratic product is dealiased with the 2/3 rule.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Error, Result};
use crate::hopf::InitialData;
use crate::numerics::ode::{dopri5, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvOptions {
    /// Relative tolerance of the time stepper.
    pub rtol: f64,
    /// Largest allowed spectral tail relative to the peak coefficient.
    pub tail_limit: f64,
    /// Largest allowed conservation drift (relative).
    pub drift_limit: f64,
}

impl Default for KdvOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, tail_limit: 1e-6, drift_limit: 1e-8 }
    }
}

/// Solution snapshot on `[-P, P)` with `2^m` points.
#[derive(Debug, Clone)]
pub struct KdVField {
    pub half_period: f64,
    pub eps: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Normalised Fourier coefficients of `values` (`c_j = FFT(u)_j / n`).
    coeffs: Vec<Complex<f64>>,
    pub mass_drift: f64,
    pub l2_drift: f64,
    /// Largest coefficient in the outer fifth of the retained band, relative
    /// to the peak.
    pub spectral_tail: f64,
    pub steps: usize,
}

fn wavenumbers(n: usize, p: f64) -> Vec<f64> {
    let base = PI / p;
    (0..n)
        .map(|j| {
            let s = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * s
        })
        .collect()
}

/// Indices kept by the 2/3 rule.
fn retained(n: usize) -> Vec<bool> {
    let cut = n / 3;
    (0..n).map(|j| j.min(n - j) <= cut && !(n % 2 == 0 && j == n / 2)).collect()
}

fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs();
    if scale > 0.0 {
        (b - a).abs() / scale
    } else {
        (b - a).abs()
    }
}

fn spectral_tail(coeffs: &[Complex<f64>]) -> f64 {
    let n = coeffs.len();
    let cut = n / 3;
    let lo = (4 * cut) / 5;
    let peak = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let tail = coeffs
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let a = (*j).min(n - *j);
            a > lo && a <= cut
        })
        .fold(0.0f64, |m, (_, c)| m.max(c.norm()));
    tail / peak
}

struct Kdv {
    n: usize,
    eps2: f64,
    k: Vec<f64>,
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Kdv {
    fn new(n: usize, p: f64, eps: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            eps2: eps * eps,
            k: wavenumbers(n, p),
            keep: retained(n),
            fwd,
            inv,
            buf: vec![Complex::new(0.0, 0.0); n],
            scratch: vec![Complex::new(0.0, 0.0); len],
        }
    }

    /// Phase `ε² k³ t` of the linear propagator `û(t) = e^{i ε² k³ t} v̂`.
    fn phase(&self, j: usize, t: f64) -> Complex<f64> {
        let k = self.k[j];
        Complex::from_polar(1.0, self.eps2 * k * k * k * t)
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            self.buf[j] = Complex::new(y[2 * j], y[2 * j + 1]) * self.phase(j, t);
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        for c in self.buf.iter_mut() {
            *c = Complex::new(c.re * c.re, 0.0);
        }
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for j in 0..n {
            let d = if self.keep[j] {
                // 6 u u_x = 3 (u²)_x
                Complex::new(0.0, -3.0 * self.k[j]) * self.buf[j] * scale * self.phase(j, t).conj()
            } else {
                Complex::new(0.0, 0.0)
            };
            dy[2 * j] = d.re;
            dy[2 * j + 1] = d.im;
        }
    }
}

fn grid(n: usize, p: f64) -> Vec<f64> {
    let h = 2.0 * p / n as f64;
    (0..n).map(|i| -p + h * i as f64).collect()
}

fn moments(values: &[f64], h: f64) -> (f64, f64) {
    let m = values.iter().sum::<f64>() * h;
    let l2 = values.iter().map(|v| v * v).sum::<f64>() * h;
    (m, l2)
}

/// Solve from a profile on `[-P, P)` with `2^m` points up to `t_final`.
pub fn solve_kdv_profile(
    u0: &dyn Fn(f64) -> f64,
    eps: f64,
    t_final: f64,
    p: f64,
    m: u32,
    opts: &KdvOptions,
) -> Result<KdVField> {
    if !(eps > 0.0) || !(p > 0.0) || !(t_final >= 0.0) || !t_final.is_finite() {
        return domain("solve_kdv needs eps > 0, P > 0 and finite t_final >= 0");
    }
    if !(3..=20).contains(&m) {
        return domain(format!("grid exponent m = {m} outside 3..=20"));
    }
    if !(opts.rtol > 0.0) {
        return domain("time tolerance must be positive");
    }
    let edge = u0(-p).abs().max(u0(p).abs());
    if !(edge < 1e-8) {
        return domain(format!("|u0(±P)| = {edge:.3e} is not negligible; enlarge P"));
    }
    let n = 1usize << m;
    let h = 2.0 * p / n as f64;
    if !(h < eps / 4.0) {
        return Err(Error::Resolution(format!("grid spacing {h:.3e} is not below eps/4 = {:.3e}", eps / 4.0)));
    }
    let x = grid(n, p);
    let mut sys = Kdv::new(n, p, eps);

    for (b, &xi) in sys.buf.iter_mut().zip(&x) {
        *b = Complex::new(u0(xi), 0.0);
    }
    sys.fwd.process_with_scratch(&mut sys.buf, &mut sys.scratch);
    let mut y = vec![0.0; 2 * n];
    for j in 0..n {
        if sys.keep[j] {
            let c = sys.buf[j] / n as f64;
            y[2 * j] = c.re;
            y[2 * j + 1] = c.im;
        }
    }
    let initial: Vec<Complex<f64>> = (0..n).map(|j| Complex::new(y[2 * j], y[2 * j + 1])).collect();
    let values0 = synthesize(&mut sys, &initial);
    let (mass0, l2_0) = moments(&values0, h);

    let peak = initial.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let aopts = AdaptiveOptions {
        rtol: opts.rtol,
        atol: opts.rtol * peak.max(1e-300),
        h0: 1e-4,
        h_max: f64::INFINITY,
        max_steps: 5_000_000,
    };
    let stats = if t_final > 0.0 && peak > 0.0 {
        dopri5(|t, y, dy| sys.rhs(t, y, dy), 0.0, t_final, &mut y, &aopts)?
    } else {
        Default::default()
    };

    let coeffs: Vec<Complex<f64>> =
        (0..n).map(|j| Complex::new(y[2 * j], y[2 * j + 1]) * sys.phase(j, t_final)).collect();
    let values = synthesize(&mut sys, &coeffs);
    if values.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
        return Err(Error::Stability(format!("solution blew up before t = {t_final}")));
    }
    let tail = spectral_tail(&coeffs);
    if tail > opts.tail_limit {
        return Err(Error::Resolution(format!("spectral tail {tail:.3e} exceeds {:.1e} of the peak", opts.tail_limit)));
    }
    let (mass, l2) = moments(&values, h);
    let field = KdVField {
        half_period: p,
        eps,
        t: t_final,
        x,
        values,
        coeffs,
        mass_drift: relative_change(mass0, mass),
        l2_drift: relative_change(l2_0, l2),
        spectral_tail: tail,
        steps: stats.accepted,
    };
    if field.mass_drift.max(field.l2_drift) > opts.drift_limit {
        return Err(Error::Accuracy(format!(
            "conservation drift {:.3e} (mass) / {:.3e} (L²) above {:.1e}",
            field.mass_drift, field.l2_drift, opts.drift_limit
        )));
    }
    Ok(field)
}

fn synthesize(sys: &mut Kdv, coeffs: &[Complex<f64>]) -> Vec<f64> {
    sys.buf.copy_from_slice(coeffs);
    sys.inv.process_with_scratch(&mut sys.buf, &mut sys.scratch);
    sys.buf.iter().map(|c| c.re).collect()
}

pub fn solve_kdv(data: &dyn InitialData, eps: f64, t_final: f64, p: f64, m: u32) -> Result<KdVField> {
    solve_kdv_with(data, eps, t_final, p, m, &KdvOptions::default())
}

pub fn solve_kdv_with(
    data: &dyn InitialData,
    eps: f64,
    t_final: f64,
    p: f64,
    m: u32,
    opts: &KdvOptions,
) -> Result<KdVField> {
    solve_kdv_profile(&|x| data.u0(x), eps, t_final, p, m, opts)
}

impl KdVField {
    /// Wrap grid values on `[-P, P)` as a field snapshot.
    pub fn from_values(half_period: f64, eps: f64, t: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !(half_period > 0.0) {
            return domain("field needs at least two values and P > 0");
        }
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let coeffs: Vec<Complex<f64>> = buf.into_iter().map(|c| c / n as f64).collect();
        Ok(Self {
            half_period,
            eps,
            t,
            x: grid(n, half_period),
            spectral_tail: spectral_tail(&coeffs),
            values,
            coeffs,
            mass_drift: 0.0,
            l2_drift: 0.0,
            steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mass `∫ u dx` by the trapezoidal rule.
    pub fn mass(&self) -> f64 {
        moments(&self.values, 2.0 * self.half_period / self.len() as f64).0
    }

    /// `∫ u² dx` by the trapezoidal rule.
    pub fn l2(&self) -> f64 {
        moments(&self.values, 2.0 * self.half_period / self.len() as f64).1
    }
}

/// Band-limited (trigonometric) interpolation of the field at `x`.
pub fn probe(field: &KdVField, x: f64) -> f64 {
    let n = field.coeffs.len();
    let s = x + field.half_period;
    let base = PI / field.half_period;
    let mut acc = 0.0;
    for (j, c) in field.coeffs.iter().enumerate() {
        if n % 2 == 0 && j == n / 2 {
            acc += c.re * (base * j as f64 * s).cos();
            continue;
        }
        let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * base;
        let (sn, cs) = (k * s).sin_cos();
        acc += c.re * cs - c.im * sn;
    }
    acc
}
