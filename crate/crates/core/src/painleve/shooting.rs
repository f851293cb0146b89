//! Shooting oracles: fixed-step RK4 multiple shooting for Dirichlet
//! problems, and amplitude bisection for the Hastings–McLeod solution.

use crate::error::{domain, Error, Result};
use crate::numerics::banded::BandMatrix;
use crate::numerics::bvp::{Dirichlet, FirstOrderSystem, Side};
use crate::numerics::ode::rk4_step;
use crate::numerics::special::airy_pair;

use super::pi2::{pi2_asymptote, Pi2System};

#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub breaks: Vec<f64>,
    /// State at every break.
    pub states: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

impl ShootingSolution {
    /// State at a break point, if `x` is one.
    pub fn at_break(&self, x: f64) -> Option<&[f64]> {
        self.breaks.iter().position(|&b| (b - x).abs() < 1e-12).map(|i| self.states[i].as_slice())
    }
}

/// Flow map of one segment and its derivative with respect to the start state.
fn propagate<S: FirstOrderSystem>(sys: &S, a: f64, b: f64, steps: usize, y0: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = sys.dim();
    let mut z = vec![0.0; m + m * m];
    z[..m].copy_from_slice(y0);
    for i in 0..m {
        z[m + i * m + i] = 1.0;
    }
    let mut jac = vec![0.0; m * m];
    let mut rhs = |x: f64, z: &[f64], out: &mut [f64]| {
        sys.rhs(x, &z[..m], &mut out[..m]);
        sys.jacobian(x, &z[..m], &mut jac);
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..m {
                    s += jac[i * m + k] * z[m + k * m + j];
                }
                out[m + i * m + j] = s;
            }
        }
    };
    let h = (b - a) / steps as f64;
    for k in 0..steps {
        rk4_step(&mut rhs, a + h * k as f64, &mut z, h);
    }
    (z[..m].to_vec(), z[m..].to_vec())
}

/// Multiple shooting with `steps` RK4 steps per segment and Newton on
/// the continuity conditions.
pub fn multiple_shooting<S: FirstOrderSystem + Sync>(
    sys: &S,
    breaks: &[f64],
    steps: usize,
    bcs: &[Dirichlet],
    initial: &dyn Fn(f64, &mut [f64]),
    max_newton: usize,
) -> Result<ShootingSolution> {
    let m = sys.dim();
    if breaks.len() < 2 || bcs.len() != m || steps == 0 {
        return domain("multiple shooting needs two breaks, dim boundary conditions and steps > 0");
    }
    let left: Vec<&Dirichlet> = bcs.iter().filter(|c| c.side == Side::Left).collect();
    let right: Vec<&Dirichlet> = bcs.iter().filter(|c| c.side == Side::Right).collect();
    let (ml, mr) = (left.len(), right.len());
    let segs = breaks.len() - 1;
    let n = m * (segs + 1);
    let mut states = vec![0.0; n];
    for (j, &x) in breaks.iter().enumerate() {
        initial(x, &mut states[j * m..(j + 1) * m]);
    }
    let residual_of = |st: &[f64], want_jac: bool| -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut r = vec![0.0; n];
        let mut jacs = Vec::new();
        for (i, c) in left.iter().enumerate() {
            r[i] = st[c.component] - c.value;
        }
        for j in 0..segs {
            let (yb, phi) = propagate(sys, breaks[j], breaks[j + 1], steps, &st[j * m..(j + 1) * m]);
            for i in 0..m {
                r[ml + j * m + i] = yb[i] - st[(j + 1) * m + i];
            }
            if want_jac {
                jacs.push(phi);
            }
        }
        for (i, c) in right.iter().enumerate() {
            r[n - mr + i] = st[segs * m + c.component] - c.value;
        }
        (r, jacs)
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let (mut r, mut jacs) = residual_of(&states, true);
    let mut rnorm = norm(&r);
    let kl = ml + m - 1;
    let ku = 2 * m - 1 - ml;
    for it in 1..=max_newton {
        let mut a = BandMatrix::zeros(n, kl, ku);
        for (i, c) in left.iter().enumerate() {
            a.set(i, c.component, 1.0);
        }
        for (j, phi) in jacs.iter().enumerate() {
            for i in 0..m {
                let row = ml + j * m + i;
                for k in 0..m {
                    a.set(row, j * m + k, phi[i * m + k]);
                }
                a.set(row, (j + 1) * m + i, -1.0);
            }
        }
        for (i, c) in right.iter().enumerate() {
            a.set(n - mr + i, segs * m + c.component, 1.0);
        }
        let lu = a.factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut delta);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = states.iter().zip(&delta).map(|(s, d)| s + lambda * d).collect();
            let (rt, jt) = residual_of(&trial, true);
            let nt = norm(&rt);
            if nt.is_finite() && (nt < rnorm || nt < 1e-13) {
                states = trial;
                r = rt;
                jacs = jt;
                rnorm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence { iterations: it, residual: rnorm, last: Vec::new() });
        }
        let scale = 1.0 + norm(&states);
        let small = norm(&delta) < 1e-12 * scale || (rnorm < 1e-10 * scale && norm(&delta) < 1e-8 * scale);
        if lambda == 1.0 && small {
            let states = states.chunks(m).map(|c| c.to_vec()).collect();
            return Ok(ShootingSolution { breaks: breaks.to_vec(), states, iterations: it, residual: rnorm });
        }
    }
    Err(Error::Convergence { iterations: max_newton, residual: rnorm, last: Vec::new() })
}

/// The fourth-order Painlevé I problem on `[-L, L]` by multiple shooting
/// with unit segments split in `segments_per_unit` pieces and RK4 step `h`.
pub fn shoot_pi2(t: f64, l: f64, segments_per_unit: usize, h: f64) -> Result<ShootingSolution> {
    if !(l > 1.0) || segments_per_unit == 0 || !(h > 0.0) {
        return domain("shoot_pi2 needs L > 1, segments > 0 and h > 0");
    }
    let total = (2.0 * l * segments_per_unit as f64).round() as usize;
    let total = total + total % 2;
    let breaks: Vec<f64> = (0..=total).map(|i| -l + 2.0 * l * i as f64 / total as f64).collect();
    let steps = (((2.0 * l) / total as f64) / h).ceil() as usize;
    let (ul, dl) = pi2_asymptote(-l, t);
    let (ur, dr) = pi2_asymptote(l, t);
    let bcs = [
        Dirichlet { side: Side::Left, component: 0, value: ul },
        Dirichlet { side: Side::Left, component: 1, value: dl },
        Dirichlet { side: Side::Right, component: 0, value: ur },
        Dirichlet { side: Side::Right, component: 1, value: dr },
    ];
    let guess = |x: f64, y: &mut [f64]| {
        let g = |x: f64| -6.0 * x / (36.0 * x * x + 1.0).cbrt();
        let e = 1e-3;
        y[0] = g(x);
        y[1] = (g(x + e) - g(x - e)) / (2.0 * e);
        y[2] = (g(x + e) - 2.0 * g(x) + g(x - e)) / (e * e);
        y[3] = (g(x + 2.0 * e) - 2.0 * g(x + e) + 2.0 * g(x - e) - g(x - 2.0 * e)) / (2.0 * e * e * e);
    };
    multiple_shooting(&Pi2System { t }, &breaks, steps, &bcs, &guess, 80)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmShooting {
    /// Amplitude `k` of the Airy data `q ≈ k Ai(s)` at the start point.
    pub k: f64,
    pub q0: f64,
    pub qp0: f64,
}

/// Integrate `q'' = s q + 2 q³` backward from Airy data `k Ai(s0)`.
/// Returns `(q(0), q'(0))` and the state at `s_end`, or `None` once the
/// orbit has clearly blown up or crossed zero.
fn backward(k: f64, s0: f64, s_end: f64, h: f64) -> (f64, f64, Option<[f64; 2]>) {
    let (ai, aip) = airy_pair(s0);
    let mut y = [k * ai, k * aip];
    let mut f = |s: f64, y: &[f64], out: &mut [f64]| {
        out[0] = y[1];
        out[1] = s * y[0] + 2.0 * y[0].powi(3);
    };
    let mut at_zero = (f64::NAN, f64::NAN);
    for (a, b) in [(s0, 0.0), (0.0, s_end)] {
        let steps = ((a - b) / h).ceil() as usize;
        let hh = (a - b) / steps as f64;
        for i in 0..steps {
            let s = a - hh * i as f64;
            rk4_step(&mut f, s, &mut y, -hh);
            if y[0] < 0.0 || y[0] > 10.0 * (1.0 + s.abs()) {
                return (at_zero.0, at_zero.1, None);
            }
        }
        if b == 0.0 {
            at_zero = (y[0], y[1]);
        }
    }
    (at_zero.0, at_zero.1, Some(y))
}

/// Bisection on the Airy amplitude at `s0`. Larger amplitudes overshoot
/// `√(-s/2)` and blow up, smaller ones fall below it and cross zero; the
/// separatrix is the Hastings–McLeod solution.
pub fn hastings_mcleod_shooting(s0: f64, s_end: f64, h: f64) -> Result<HmShooting> {
    if !(s0 > 0.0 && s_end < 0.0 && h > 0.0) {
        return domain("need s0 > 0 > s_end and h > 0");
    }
    let too_big = |k: f64| -> bool {
        // Decide by the first departure from the parabola branch.
        let (ai, aip) = airy_pair(s0);
        let mut y = [k * ai, k * aip];
        let mut f = |s: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[1];
            out[1] = s * y[0] + 2.0 * y[0].powi(3);
        };
        let steps = ((s0 - s_end) / h).ceil() as usize;
        let hh = (s0 - s_end) / steps as f64;
        for i in 0..steps {
            let s = s0 - hh * i as f64;
            rk4_step(&mut f, s, &mut y, -hh);
            if y[0] < 0.0 {
                return false;
            }
            if y[0] > 10.0 * (1.0 + s.abs()) {
                return true;
            }
        }
        y[0] > (-s_end / 2.0).sqrt()
    };
    let (mut lo, mut hi) = (0.5, 1.5);
    let mut iterations = 0;
    while hi - lo > 1e-15 && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if too_big(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let k = 0.5 * (lo + hi);
    let (q0, qp0, _) = backward(k, s0, s_end, h);
    if !q0.is_finite() {
        return Err(Error::Convergence { iterations, residual: hi - lo, last: vec![k] });
    }
    Ok(HmShooting { k, q0, qp0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hm_amplitude_is_one() {
        let r = hastings_mcleod_shooting(8.0, -6.0, 1e-3).unwrap();
        assert!((r.k - 1.0).abs() < 1e-8, "{}", r.k);
        assert!(r.q0 > 0.3 && r.q0 < 0.4);
    }

    #[test]
    fn linear_problem_by_shooting() {
        struct Harmonic;
        impl FirstOrderSystem for Harmonic {
            fn dim(&self) -> usize {
                2
            }
            fn rhs(&self, _x: f64, y: &[f64], out: &mut [f64]) {
                out[0] = y[1];
                out[1] = -y[0];
            }
            fn jacobian(&self, _x: f64, _y: &[f64], out: &mut [f64]) {
                out.copy_from_slice(&[0.0, 1.0, -1.0, 0.0]);
            }
        }
        let b = std::f64::consts::FRAC_PI_2;
        let breaks: Vec<f64> = (0..=4).map(|i| b * i as f64 / 4.0).collect();
        let bcs = [
            Dirichlet { side: Side::Left, component: 0, value: 0.0 },
            Dirichlet { side: Side::Right, component: 0, value: 1.0 },
        ];
        let sol = multiple_shooting(&Harmonic, &breaks, 200, &bcs, &|_, y| y.fill(0.0), 20).unwrap();
        assert!((sol.states[2][0] - (b / 2.0).sin()).abs() < 1e-10);
    }

    #[test]
    fn pi2_shooting_agrees_with_collocation() {
        let sh = shoot_pi2(0.0, 50.0, 4, 0.002).unwrap();
        let col = crate::painleve::solve_pi2(0.0, 50.0, 6401).unwrap();
        let u0 = crate::painleve::eval_pi2(&col, 0.0).value;
        assert!((sh.at_break(0.0).unwrap()[0] - u0).abs() < 1e-8);
    }
}
