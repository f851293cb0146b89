//! Initial data, the Hopf solution by characteristics, the gradient
//! catastrophe, and the averaged function
//! `θ(λ; u) = (1/2√2) ∫_{-1}^{1} f_L'((1+m)λ/2 + (1-m)u/2) dm / √(1-m)`.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::numerics::interp::Pchip;
use crate::numerics::quadrature::cached_gauss_jacobi;
use crate::numerics::roots::brent;

/// A KdV initial profile with a single negative minimum `u0(x_M) = -1`.
///
/// `f_L` is the inverse of the decreasing branch `x < x_M`.
pub trait InitialData: Send + Sync + std::fmt::Debug {
    fn u0(&self, x: f64) -> f64;
    /// Derivative of order 1 to 3 of `u0`.
    fn u0_deriv(&self, x: f64, order: usize) -> f64;
    fn u0_prime(&self, x: f64) -> f64 {
        self.u0_deriv(x, 1)
    }
    fn x_min(&self) -> f64;
    fn f_l(&self, u: f64) -> f64;
    /// Derivative of order 1 to 3 of `f_L`.
    fn f_l_deriv(&self, u: f64, order: usize) -> f64;
    fn domain_halfwidth(&self) -> f64;
}

pub type DataRef = Arc<dyn InitialData>;

/// `u0(x) = -sech²(x)` with closed-form inverse and derivatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sech2;

pub fn make_sech2_data() -> DataRef {
    Arc::new(Sech2)
}

impl InitialData for Sech2 {
    fn u0(&self, x: f64) -> f64 {
        -1.0 / x.cosh().powi(2)
    }

    fn u0_deriv(&self, x: f64, order: usize) -> f64 {
        let s = 1.0 / x.cosh().powi(2);
        let t = x.tanh();
        match order {
            0 => -s,
            1 => 2.0 * s * t,
            2 => 2.0 * s * (1.0 - 3.0 * t * t),
            3 => 8.0 * s * t * (3.0 * t * t - 2.0),
            _ => f64::NAN,
        }
    }

    fn x_min(&self) -> f64 {
        0.0
    }

    fn f_l(&self, u: f64) -> f64 {
        -((1.0 + (1.0 + u).sqrt()) / (-u).sqrt()).ln()
    }

    fn f_l_deriv(&self, u: f64, order: usize) -> f64 {
        // f_L' = (1/2) u^{-1} (1+u)^{-1/2}; higher orders by the product rule.
        let a = 1.0 / u;
        let b = 1.0 / (1.0 + u).sqrt();
        let r = 1.0 / (1.0 + u);
        match order {
            1 => 0.5 * a * b,
            2 => 0.5 * a * b * (-a - 0.5 * r),
            3 => 0.5 * a * b * (2.0 * a * a + a * r + 0.75 * r * r),
            _ => f64::NAN,
        }
    }

    fn domain_halfwidth(&self) -> f64 {
        20.0
    }
}

/// `u0(λ x)` for a base profile.
#[derive(Debug, Clone)]
pub struct Scaled {
    pub base: DataRef,
    pub lambda: f64,
}

impl InitialData for Scaled {
    fn u0(&self, x: f64) -> f64 {
        self.base.u0(self.lambda * x)
    }
    fn u0_deriv(&self, x: f64, order: usize) -> f64 {
        self.lambda.powi(order as i32) * self.base.u0_deriv(self.lambda * x, order)
    }
    fn x_min(&self) -> f64 {
        self.base.x_min() / self.lambda
    }
    fn f_l(&self, u: f64) -> f64 {
        self.base.f_l(u) / self.lambda
    }
    fn f_l_deriv(&self, u: f64, order: usize) -> f64 {
        self.base.f_l_deriv(u, order) / self.lambda
    }
    fn domain_halfwidth(&self) -> f64 {
        self.base.domain_halfwidth() / self.lambda
    }
}

/// Sampled profile: monotone cubic interpolation of `u0` and of the
/// inverted decreasing branch, finite differences for higher derivatives.
#[derive(Debug, Clone)]
pub struct Tabulated {
    profile: Pchip,
    inverse: Pchip,
    x_m: f64,
    halfwidth: f64,
}

impl Tabulated {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.len() < 8 {
            return domain("tabulated initial data needs at least 8 samples");
        }
        let (i_m, &u_m) = u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .ok_or_else(|| Error::Domain("empty data".into()))?;
        if (u_m + 1.0).abs() > 1e-10 {
            return domain(format!("minimum of u0 must be -1, got {u_m}"));
        }
        if u.iter().any(|&v| v >= 0.0) {
            return domain("u0 must be negative at every sample");
        }
        if u[..=i_m].windows(2).any(|w| !(w[1] < w[0])) {
            return domain("u0 must decrease strictly left of its minimum");
        }
        let halfwidth = x[0].abs().min(x[x.len() - 1].abs());
        if u[0].abs() > 1e-8 || u[u.len() - 1].abs() > 1e-8 {
            return domain("u0 must decay below 1e-8 at the ends of the table");
        }
        let x_m = x[i_m];
        let mut inv_u: Vec<f64> = u[..=i_m].to_vec();
        let mut inv_x: Vec<f64> = x[..=i_m].to_vec();
        inv_u.reverse();
        inv_x.reverse();
        let profile = Pchip::new(x, u)?;
        let inverse = Pchip::new(inv_u, inv_x)?;
        Ok(Self { profile, inverse, x_m, halfwidth })
    }

    /// Read two comma- or whitespace-separated columns `x, u0`.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
            let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
                return domain(format!("bad initial-data line: {line}"));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(u)) => {
                    xs.push(x);
                    us.push(u);
                }
                _ if xs.is_empty() => continue, // header
                _ => return domain(format!("bad initial-data line: {line}")),
            }
        }
        Self::new(xs, us)
    }
}

fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

impl InitialData for Tabulated {
    fn u0(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }
    fn u0_deriv(&self, x: f64, order: usize) -> f64 {
        let h = 1e-4 * (1.0 + x.abs());
        match order {
            0 => self.profile.eval(x),
            1 => self.profile.eval_with_derivative(x).1,
            2 => central_diff(|s| self.profile.eval_with_derivative(s).1, x, h),
            3 => central_diff(|s| central_diff(|r| self.profile.eval_with_derivative(r).1, s, h), x, h),
            _ => f64::NAN,
        }
    }
    fn x_min(&self) -> f64 {
        self.x_m
    }
    fn f_l(&self, u: f64) -> f64 {
        self.inverse.eval(u)
    }
    fn f_l_deriv(&self, u: f64, order: usize) -> f64 {
        let h = 1e-4;
        let d1 = |s: f64| self.inverse.eval_with_derivative(s).1;
        match order {
            1 => d1(u),
            2 => central_diff(d1, u, h),
            3 => central_diff(|s| central_diff(d1, s, h), u, h),
            _ => f64::NAN,
        }
    }
    fn domain_halfwidth(&self) -> f64 {
        self.halfwidth
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatastrophePoint {
    pub x_c: f64,
    pub t_c: f64,
    pub u_c: f64,
    pub xi_c: f64,
    /// `k = -f_L'''(u_c)`.
    pub k: f64,
}

/// Hopf solution `u(x, t) = u0(ξ)` with `x = 6 t u0(ξ) + ξ`.
pub fn hopf_solve(x: f64, t: f64, data: &dyn InitialData) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("hopf_solve needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(data.u0(x));
    }
    // u0 ∈ [-1, 0) puts every root in [x, x + 6t].
    let g = |xi: f64| x - 6.0 * t * data.u0(xi) - xi;
    let (lo, hi) = (x - 1e-9, x + 6.0 * t + 1e-9);
    let n = 4096;
    let h = (hi - lo) / n as f64;
    let mut brackets = Vec::new();
    let mut g0 = g(lo);
    for i in 1..=n {
        let a = lo + h * (i - 1) as f64;
        let b = lo + h * i as f64;
        let g1 = g(b);
        if g0 == 0.0 {
            brackets.push((a, a));
        } else if g0 * g1 < 0.0 {
            brackets.push((a, b));
        }
        g0 = g1;
    }
    let mut roots = Vec::with_capacity(brackets.len());
    for (a, b) in brackets {
        let r = if a == b { a } else { brent(g, a, b, 1e-15)? };
        roots.push(r);
    }
    match roots.len() {
        0 => Err(Error::Convergence { iterations: n, residual: f64::NAN, last: vec![x, t] }),
        1 => {
            let mut xi = roots[0];
            // Newton polish where the root is simple.
            for _ in 0..3 {
                let d = -6.0 * t * data.u0_prime(xi) - 1.0;
                if d.abs() < 1e-6 {
                    break;
                }
                let step = g(xi) / d;
                xi -= step;
            }
            let res = g(xi).abs();
            if res > 1e-10 {
                return Err(Error::Convergence { iterations: 3, residual: res, last: vec![xi] });
            }
            Ok(data.u0(xi))
        }
        _ => Err(Error::Ambiguous { branches: roots.iter().map(|&r| data.u0(r)).collect() }),
    }
}

/// `∂u/∂x` of the Hopf solution through the characteristic foot `ξ`.
pub fn hopf_slope(x: f64, t: f64, data: &dyn InitialData) -> Result<f64> {
    let u = hopf_solve(x, t, data)?;
    let xi = x - 6.0 * t * u;
    let d = data.u0_prime(xi);
    Ok(d / (1.0 + 6.0 * t * d))
}

/// Time and place of the gradient catastrophe: the maximum of `-6 u0'`.
pub fn breaking_point(data: &dyn InitialData) -> Result<CatastrophePoint> {
    let w = data.domain_halfwidth();
    let xm = data.x_min();
    let n = 20_000;
    let (lo, hi) = (xm - w, xm);
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=n {
        let xi = lo + (hi - lo) * i as f64 / n as f64;
        let v = -6.0 * data.u0_prime(xi);
        if v > best.0 {
            best = (v, xi);
        }
    }
    if !(best.0 > 0.0) {
        return Err(Error::Genericity("u0' has no negative minimum".into()));
    }
    // Newton on u0'' = 0 from the grid maximiser.
    let mut xi = best.1;
    for _ in 0..50 {
        let d2 = data.u0_deriv(xi, 2);
        let d3 = data.u0_deriv(xi, 3);
        if d3 == 0.0 {
            break;
        }
        let step = d2 / d3;
        xi -= step;
        if step.abs() < 1e-15 * (1.0 + xi.abs()) {
            break;
        }
    }
    let curvature = 6.0 * data.u0_deriv(xi, 3);
    if curvature.abs() <= 1e-6 {
        return Err(Error::Genericity(format!("second derivative of -6u0' at the maximiser is {curvature:.3e}")));
    }
    let t_c = 1.0 / (-6.0 * data.u0_prime(xi));
    let u_c = data.u0(xi);
    let x_c = 6.0 * t_c * u_c + xi;
    let k = -data.f_l_deriv(u_c, 3);
    Ok(CatastrophePoint { x_c, t_c, u_c, xi_c: xi, k })
}

/// θ together with its first two `λ`-derivatives and the `u`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEval {
    pub theta: f64,
    pub d_lambda: f64,
    pub d2_lambda: f64,
    pub d_u: f64,
    pub nodes: usize,
}

fn theta_with_rule(lambda: f64, u: f64, n: usize, data: &dyn InitialData) -> Result<ThetaEval> {
    let rule = cached_gauss_jacobi(n, -0.5, 0.0)?;
    let (mut t0, mut t1, mut t2, mut tu) = (0.0, 0.0, 0.0, 0.0);
    for (&m, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = 0.5 * (1.0 + m);
        let q = 0.5 * (1.0 - m);
        let arg = p * lambda + q * u;
        t0 += w * data.f_l_deriv(arg, 1);
        let d2 = data.f_l_deriv(arg, 2);
        t1 += w * d2 * p;
        tu += w * d2 * q;
        t2 += w * data.f_l_deriv(arg, 3) * p * p;
    }
    let c = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    Ok(ThetaEval { theta: c * t0, d_lambda: c * t1, d2_lambda: c * t2, d_u: c * tu, nodes: n })
}

/// θ(λ; u) and derivatives by Gauss–Jacobi quadrature, doubling the node
/// count until successive values agree to 1e-10.
pub fn theta_full(lambda: f64, u: f64, data: &dyn InitialData) -> Result<ThetaEval> {
    let inside = |w: f64| w > -1.0 && w < 0.0;
    if !inside(lambda) || !inside(u) {
        return domain(format!("θ arguments must lie in (-1, 0), got λ = {lambda}, u = {u}"));
    }
    let mut n = 16;
    let mut prev = theta_with_rule(lambda, u, n, data)?;
    while n < 1024 {
        n *= 2;
        let cur = theta_with_rule(lambda, u, n, data)?;
        let scale = 1.0 + cur.theta.abs();
        if (cur.theta - prev.theta).abs() < 1e-10 * scale
            && (cur.d_lambda - prev.d_lambda).abs() < 1e-9 * (1.0 + cur.d_lambda.abs())
            && (cur.d2_lambda - prev.d2_lambda).abs() < 1e-8 * (1.0 + cur.d2_lambda.abs())
        {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!("θ quadrature not converged at λ = {lambda}, u = {u}")))
}

pub fn theta_of(lambda: f64, u: f64, data: &dyn InitialData) -> Result<f64> {
    theta_full(lambda, u, data).map(|t| t.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sech2_basics() {
        let d = Sech2;
        assert_eq!(d.u0(0.0), -1.0);
        assert!(d.f_l(-1.0).abs() < 1e-15);
        assert!((d.f_l(d.u0(-2.0)) + 2.0).abs() < 1e-10);
    }

    #[test]
    fn sech2_inverse_derivatives_match_differences() {
        let d = Sech2;
        for u in [-0.9, -0.6, -0.3, -0.05] {
            let h = 1e-5;
            let fd1 = (d.f_l(u + h) - d.f_l(u - h)) / (2.0 * h);
            let fd2 = (d.f_l_deriv(u + h, 1) - d.f_l_deriv(u - h, 1)) / (2.0 * h);
            let fd3 = (d.f_l_deriv(u + h, 2) - d.f_l_deriv(u - h, 2)) / (2.0 * h);
            assert_relative_eq!(d.f_l_deriv(u, 1), fd1, max_relative = 1e-7);
            assert_relative_eq!(d.f_l_deriv(u, 2), fd2, max_relative = 1e-7);
            assert_relative_eq!(d.f_l_deriv(u, 3), fd3, max_relative = 1e-6);
        }
        for x in [-2.0, -0.7, 0.4] {
            let h = 1e-5;
            for k in 1..=3 {
                let fd = (d.u0_deriv(x + h, k - 1) - d.u0_deriv(x - h, k - 1)) / (2.0 * h);
                assert_relative_eq!(d.u0_deriv(x, k), fd, max_relative = 1e-7, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hopf_at_time_zero() {
        let d = Sech2;
        for x in [-3.0, -0.5, 0.0, 1.2] {
            assert!((hopf_solve(x, 0.0, &d).unwrap() - d.u0(x)).abs() < 1e-15);
        }
    }

    /// Dense scan of the characteristic equation over ξ, then bisection.
    fn scan_oracle(x: f64, t: f64, d: &dyn InitialData) -> f64 {
        let w = d.domain_halfwidth();
        let n = 10_000_000usize;
        let g = |xi: f64| x - 6.0 * t * d.u0(xi) - xi;
        let h = 2.0 * w / n as f64;
        let mut prev = g(-w);
        for i in 1..=n {
            let b = -w + h * i as f64;
            let gb = g(b);
            if prev * gb <= 0.0 {
                let (mut lo, mut hi) = (b - h, b);
                for _ in 0..80 {
                    let m = 0.5 * (lo + hi);
                    if g(lo) * g(m) <= 0.0 {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                return d.u0(0.5 * (lo + hi));
            }
            prev = gb;
        }
        f64::NAN
    }

    #[test]
    fn hopf_against_dense_scan() {
        let d = Sech2;
        let want = scan_oracle(0.0, 0.1, &d);
        let got = hopf_solve(0.0, 0.1, &d).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn hopf_at_catastrophe() {
        let d = Sech2;
        let cp = breaking_point(&d).unwrap();
        let u = hopf_solve(cp.x_c, cp.t_c, &d).unwrap();
        // Triple root: the foot is only determined to about eps^{1/3}.
        assert!((u + 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn hopf_detects_multivalued_region() {
        let d = Sech2;
        let cp = breaking_point(&d).unwrap();
        let t = cp.t_c + 0.05;
        let x = cp.x_c + 6.0 * cp.u_c * 0.05;
        match hopf_solve(x, t, &d) {
            Err(Error::Ambiguous { branches }) => assert_eq!(branches.len(), 3),
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn slope_blows_up_at_catastrophe() {
        let d = Sech2;
        let cp = breaking_point(&d).unwrap();
        let t = cp.t_c - 1e-6;
        let x = 6.0 * t * cp.u_c + cp.xi_c;
        assert!(hopf_slope(x, t, &d).unwrap().abs() > 1e3);
    }

    #[test]
    fn catastrophe_point_of_sech2() {
        let cp = breaking_point(&Sech2).unwrap();
        assert_relative_eq!(cp.t_c, 3f64.sqrt() / 8.0, max_relative = 1e-12);
        assert_relative_eq!(cp.u_c, -2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(cp.xi_c, (-1.0 / 3f64.sqrt()).atanh(), max_relative = 1e-12);
        assert!((cp.x_c - (6.0 * cp.t_c * cp.u_c + cp.xi_c)).abs() < 1e-10);
        assert!(cp.k > 0.0);
    }

    #[test]
    fn scaled_data_breaks_earlier() {
        let base = make_sech2_data();
        let scaled = Scaled { base: base.clone(), lambda: 2.0 };
        let a = breaking_point(base.as_ref()).unwrap();
        let b = breaking_point(&scaled).unwrap();
        assert_relative_eq!(b.t_c, a.t_c / 2.0, max_relative = 1e-10);
    }

    #[derive(Debug)]
    struct ConstantSlope(f64);
    impl InitialData for ConstantSlope {
        fn u0(&self, _x: f64) -> f64 {
            f64::NAN
        }
        fn u0_deriv(&self, _x: f64, _o: usize) -> f64 {
            f64::NAN
        }
        fn x_min(&self) -> f64 {
            0.0
        }
        fn f_l(&self, u: f64) -> f64 {
            self.0 * u
        }
        fn f_l_deriv(&self, _u: f64, order: usize) -> f64 {
            if order == 1 {
                self.0
            } else {
                0.0
            }
        }
        fn domain_halfwidth(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn theta_of_constant_slope() {
        let d = ConstantSlope(-2.5);
        assert_relative_eq!(theta_of(-0.7, -0.2, &d).unwrap(), -2.5, max_relative = 1e-13);
    }

    #[test]
    fn theta_domain_error() {
        assert!(theta_of(-1.2, -0.3, &Sech2).is_err());
        assert!(theta_of(-0.5, 0.1, &Sech2).is_err());
    }

    #[test]
    fn theta_against_substituted_quadrature() {
        // m = 1 - τ² removes the endpoint singularity:
        // θ = (1/√2) ∫_0^{√2} f_L'(λ - (λ-u)τ²/2) dτ.
        let (lambda, u) = (-0.5, -0.3);
        let d = Sech2;
        let f = |tau: f64| d.f_l_deriv(lambda - (lambda - u) * tau * tau / 2.0, 1);
        let oracle = crate::numerics::quadrature::adaptive_legendre(&f, 0.0, 2f64.sqrt(), 1e-14).unwrap() / 2f64.sqrt();
        assert_relative_eq!(theta_of(lambda, u, &d).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn theta_derivatives_match_differences() {
        let d = Sech2;
        let (l, u) = (-0.55, -0.35);
        let h = 1e-5;
        let th = theta_full(l, u, &d).unwrap();
        let dl = (theta_of(l + h, u, &d).unwrap() - theta_of(l - h, u, &d).unwrap()) / (2.0 * h);
        let du = (theta_of(l, u + h, &d).unwrap() - theta_of(l, u - h, &d).unwrap()) / (2.0 * h);
        let d2 = (theta_full(l + h, u, &d).unwrap().d_lambda - theta_full(l - h, u, &d).unwrap().d_lambda) / (2.0 * h);
        assert_relative_eq!(th.d_lambda, dl, max_relative = 1e-7);
        assert_relative_eq!(th.d_u, du, max_relative = 1e-7);
        assert_relative_eq!(th.d2_lambda, d2, max_relative = 1e-6);
    }

    #[test]
    fn tabulated_sech2_matches_closed_form() {
        let n = 4001;
        let x: Vec<f64> = (0..n).map(|i| -20.0 + 40.0 * i as f64 / (n - 1) as f64).collect();
        let u: Vec<f64> = x.iter().map(|&v| Sech2.u0(v)).collect();
        let tab = Tabulated::new(x, u).unwrap();
        for xx in [-3.0, -1.0, -0.3] {
            assert!((tab.f_l(tab.u0(xx)) - xx).abs() < 1e-8);
        }
        let a = breaking_point(&tab).unwrap();
        assert!((a.t_c - 3f64.sqrt() / 8.0).abs() < 1e-4);
    }

    #[test]
    fn tabulated_rejects_bad_profiles() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let u: Vec<f64> = x.iter().map(|_| -0.5).collect();
        assert!(Tabulated::new(x, u).is_err());
    }

    proptest! {
        #[test]
        fn theta_on_diagonal_is_slope(u in -0.95f64..-0.05) {
            let th = theta_of(u, u, &Sech2).unwrap();
            prop_assert!((th - Sech2.f_l_deriv(u, 1)).abs() < 1e-12 * (1.0 + th.abs()));
        }

        #[test]
        fn hopf_at_zero_time_is_identity(x in -10.0f64..10.0) {
            prop_assert!((hopf_solve(x, 0.0, &Sech2).unwrap() - Sech2.u0(x)).abs() < 1e-15);
        }

        #[test]
        fn hopf_residual_before_breaking(x in -5.0f64..5.0, t in 0.0f64..0.2) {
            let u = hopf_solve(x, t, &Sech2).unwrap();
            let xi = x - 6.0 * t * u;
            prop_assert!((Sech2.u0(xi) - u).abs() < 1e-10);
        }
    }
}
