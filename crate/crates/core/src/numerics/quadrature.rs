//! Gaussian and periodic quadrature rules.
//!
//! Gauss–Jacobi nodes come from the eigenvalues of the Jacobi matrix
//! (Golub–Welsch) and are then polished by Newton steps on the
//! three-term recurrence. Weights use the Christoffel-sum formula
//! `w_i = 1 / Σ_k p_k(x_i)²` with orthonormal `p_k`, which stays
//! accurate when the eigenvector route loses digits.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    GaussLegendre,
    /// Weight `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
    GaussJacobi {
        alpha: f64,
        beta: f64,
    },
    PeriodicTrapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum `Σ w_i f(x_i)` on the reference interval.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Integral over `[a, b]` of a Legendre rule mapped affinely.
    pub fn integrate_on(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self.integrate(|x| f(c + h * x))
    }
}

/// Gamma function, exact up to rounding on the half-integer lattice
/// (the common Jacobi exponents), library Lanczos approximation elsewhere.
fn gamma(x: f64) -> f64 {
    let twice = 2.0 * x;
    if twice == twice.round() && x > 0.0 && x < 60.0 {
        let (mut g, mut z) = if x.fract() == 0.0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
        while z < x {
            g *= z;
            z += 1.0;
        }
        return g;
    }
    statrs::function::gamma::gamma(x)
}

/// Recurrence coefficients of the monic Jacobi polynomials:
/// `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`, with `b_0 = μ_0`.
fn jacobi_recurrence(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[0] = (beta - alpha) / (ab + 2.0);
    b[0] = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        a[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
        b[k] = if k == 1 {
            4.0 * (alpha + 1.0) * (beta + 1.0) / ((ab + 2.0).powi(2) * (ab + 3.0))
        } else {
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
    }
    (a, b)
}

/// Orthonormal polynomial values `p_0..p_{n-1}` at `x` and the values
/// of `p_n` and `p_n'`, for Newton polishing and Christoffel weights.
fn orthonormal_eval(x: f64, a: &[f64], b: &[f64], bn: f64) -> (f64, f64, f64) {
    let n = a.len();
    let mut p_prev = 0.0;
    let mut p = 1.0 / b[0].sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sum_sq = p * p;
    for k in 0..n {
        let sb_next = if k + 1 < n { b[k + 1].sqrt() } else { bn.sqrt() };
        let sb = if k == 0 { 0.0 } else { b[k].sqrt() };
        let p_next = ((x - a[k]) * p - sb * p_prev) / sb_next;
        let dp_next = ((x - a[k]) * dp + p - sb * dp_prev) / sb_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        if k + 1 < n {
            sum_sq += p * p;
        }
    }
    (p, dp, sum_sq)
}

/// Gauss–Jacobi rule with weight `(1-x)^alpha (1+x)^beta`.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return domain("quadrature needs at least one node");
    }
    if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return domain(format!("Jacobi exponents must exceed -1, got ({alpha}, {beta})"));
    }
    let (a, b) = jacobi_recurrence(n + 1, alpha, beta);
    let (a_n, b_n) = (&a[..n], &b[..n]);
    let bn = b[n];

    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            a_n[i]
        } else if i + 1 == j {
            b_n[j].sqrt()
        } else if j + 1 == i {
            b_n[i].sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_eval(*x, a_n, b_n, bn);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(*x, a_n, b_n, bn);
        weights.push(1.0 / sum_sq);
    }
    let kind =
        if alpha == 0.0 && beta == 0.0 { RuleKind::GaussLegendre } else { RuleKind::GaussJacobi { alpha, beta } };
    Ok(QuadratureRule { nodes, weights, kind })
}

pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    gauss_jacobi(n, 0.0, 0.0)
}

type RuleKey = (usize, u64, u64);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoised [`gauss_jacobi`]; rules are immutable so sharing is safe.
pub fn cached_gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Arc<QuadratureRule>> {
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = rule_cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(gauss_jacobi(n, alpha, beta)?);
    rule_cache().lock().unwrap().insert(key, rule.clone());
    Ok(rule)
}

pub fn cached_gauss_legendre(n: usize) -> Result<Arc<QuadratureRule>> {
    cached_gauss_jacobi(n, 0.0, 0.0)
}

/// Trapezoid rule on a periodic interval `[a, b)` with `n` nodes.
pub fn periodic_trapezoid(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n < 2 || !(b > a) {
        return domain("periodic trapezoid needs n >= 2 and b > a");
    }
    let h = (b - a) / n as f64;
    Ok(QuadratureRule {
        nodes: (0..n).map(|i| a + h * i as f64).collect(),
        weights: vec![h; n],
        kind: RuleKind::PeriodicTrapezoid,
    })
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` split into
/// `panels` equal pieces.
pub fn composite_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> Result<f64> {
    let rule = cached_gauss_legendre(order)?;
    let h = (b - a) / panels as f64;
    Ok((0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            rule.integrate_on(lo, lo + h, &f)
        })
        .sum())
}

/// Adaptive Gauss–Legendre integration: bisect until two rule orders
/// agree to `tol` on every panel.
pub fn adaptive_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let lo = cached_gauss_legendre(20)?;
    let hi = cached_gauss_legendre(30)?;
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((l, r, depth)) = stack.pop() {
        let i1 = lo.integrate_on(l, r, f);
        let i2 = hi.integrate_on(l, r, f);
        if (i1 - i2).abs() <= tol * (r - l) / (b - a) || depth > 40 {
            if depth > 40 {
                return Err(crate::Error::Accuracy(format!("adaptive quadrature did not settle near {l}")));
            }
            total += i2;
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
    }
    Ok(total)
}
