//! Newton's method for small nonlinear systems and Brent's scalar root finder.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub bracket: Option<(f64, f64)>,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-14, max_iter: 60, bracket: None }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return domain("root tolerances must be positive");
        }
        if self.max_iter == 0 {
            return domain("max_iter must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian with step `eps^{1/3} · max(|x_j|, 1)`.
pub fn fd_jacobian<F>(f: &mut F, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let h0 = f64::EPSILON.cbrt();
    let mut jac = DMatrix::zeros(fx.len(), n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = h0 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j] - h;
        let fm = f(&xp)?;
        xp[j] = x[j];
        for i in 0..fx.len() {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Damped Newton iteration for `F(x) = 0` with a finite-difference
/// Jacobian. Halves the step while the residual norm does not decrease.
pub fn newton_solve<F>(mut f: F, x0: &[f64], cfg: &RootConfig) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut res = inf_norm(&fx);
    if res <= cfg.abs_tol {
        return Ok(NewtonOutcome { x, iterations: 0, residual: res });
    }
    for it in 1..=cfg.max_iter {
        let jac = fd_jacobian(&mut f, &x, &fx)?;
        let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
        let lu = jac.lu();
        let dx = lu
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularJacobian(format!("at iterate {x:?}")))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = f(&trial) {
                let rt = inf_norm(&ft);
                if rt.is_finite() && (rt < res || lambda < 1e-3) {
                    x = trial;
                    fx = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence { iterations: it, residual: res, last: x });
        }
        let step = lambda * inf_norm(dx.as_slice());
        if res <= cfg.abs_tol || (step <= cfg.rel_tol * inf_norm(&x).max(1.0) && res <= cfg.abs_tol * 1e3) {
            return Ok(NewtonOutcome { x, iterations: it, residual: res });
        }
    }
    Err(Error::Convergence { iterations: cfg.max_iter, residual: res, last: x })
}

/// Brent's method on a sign-changing bracket.
pub fn brent(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return domain(format!("bracket [{a}, {b}] does not change sign"));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if it == 199 {
            break;
        }
    }
    Err(Error::Convergence { iterations: 200, residual: fb.abs(), last: vec![b] })
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_quadratic() {
        let out = newton_solve(|x| Ok(vec![x[0] * x[0] - 4.0]), &[3.0], &RootConfig::default()).unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn already_a_root() {
        let out = newton_solve(|x| Ok(vec![x[0]]), &[0.0], &RootConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0]);
    }

    #[test]
    fn linear_system() {
        let out = newton_solve(|x| Ok(vec![x[0] + x[1] - 3.0, x[0] - x[1] - 1.0]), &[0.0, 0.0], &RootConfig::default())
            .unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = RootConfig { max_iter: 5, ..Default::default() };
        let err = newton_solve(|x| Ok(vec![x[0] * x[0] + 1.0]), &[0.5], &cfg).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. } | Error::SingularJacobian(_)));
    }

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(f64::cos, 1.0, 2.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    proptest! {
        #[test]
        fn newton_is_deterministic(x0 in 0.5f64..5.0, c in 1.0f64..10.0) {
            let f = |x: &[f64]| Ok(vec![x[0].powi(3) - c]);
            let a = newton_solve(f, &[x0], &RootConfig::default()).unwrap();
            let b = newton_solve(f, &[x0], &RootConfig::default()).unwrap();
            prop_assert_eq!(a.x.clone(), b.x);
            prop_assert_eq!(a.iterations, b.iterations);
            prop_assert!((a.x[0] - c.cbrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn golden_parabola() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        // A quadratic minimum is only located to about √ε in the abscissa.
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}
