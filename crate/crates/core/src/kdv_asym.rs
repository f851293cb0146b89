//! Small-dispersion KdV asymptotics: edges of the oscillatory zone, the
//! genus-one ansatz, and the expansions at the gradient catastrophe, the
//! leading edge and the trailing edge.

use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::hopf::{breaking_point, theta_full, CatastrophePoint, InitialData};
use crate::numerics::quadrature::cached_gauss_jacobi;
use crate::numerics::roots::{newton_solve, RootConfig};
use crate::numerics::special::{complete_elliptic, theta3_full};
use crate::painleve::{eval_hm, eval_pi2, solve_hastings_mcleod, solve_pi2, HMGrid, PI2Solution};
use crate::soliton::{sech2_train, TrainSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Leading,
    Trailing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSolution {
    pub kind: EdgeKind,
    pub t: f64,
    pub x_edge: f64,
    pub u: f64,
    pub v: f64,
    /// Max-norm of the two defining equations at `(u, v)`.
    pub residual: f64,
}

/// `∫_a^b g(ξ) √(ξ - a) dξ` by Gauss–Jacobi, doubling to 1e-10.
fn sqrt_weighted(a: f64, b: f64, g: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let half = 0.5 * (b - a);
    let eval = |n: usize| -> Result<f64> {
        let rule = cached_gauss_jacobi(n, 0.0, 0.5)?;
        let mut s = 0.0;
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * g(a + half * (1.0 + y))?;
        }
        Ok(s * half.abs().sqrt() * half)
    };
    let mut n = 8;
    let mut prev = eval(n)?;
    while n < 512 {
        n *= 2;
        let cur = eval(n)?;
        if (cur - prev).abs() <= 1e-10 * (1.0 + cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy("weighted edge integral not converged".into()))
}

/// `∫_u^v (6t + θ(λ; u)) √(λ - u) dλ` (trailing-edge condition).
pub fn trailing_integral(t: f64, u: f64, v: f64, data: &dyn InitialData) -> Result<f64> {
    sqrt_weighted(u, v, &|lam| Ok(6.0 * t + theta_full(lam, u, data)?.theta))
}

/// Defining equations, scaled so both components stay O(1) near the cusp.
fn edge_equations(kind: EdgeKind, t: f64, u: f64, v: f64, data: &dyn InitialData) -> Result<[f64; 2]> {
    let th = theta_full(v, u, data)?;
    let f1 = 6.0 * t + th.theta;
    let f2 = match kind {
        EdgeKind::Leading => th.d_lambda,
        EdgeKind::Trailing => {
            let w = v - u;
            if !(w > 0.0) {
                return domain("trailing edge needs u < v");
            }
            trailing_integral(t, u, v, data)? / w.powf(1.5)
        }
    };
    Ok([f1, f2])
}

/// Local expansion of the edge values for `t` just above `t_c`.
fn edge_seed(kind: EdgeKind, t: f64, cp: &CatastrophePoint) -> (f64, f64) {
    let dt = t - cp.t_c;
    match kind {
        EdgeKind::Leading => {
            let b = -(9.0 * dt / (2.0 * cp.k)).sqrt();
            (cp.u_c - 4.0 * b, cp.u_c + b)
        }
        EdgeKind::Trailing => {
            let d = (245.0 * 6.0 * dt / (12.0 * cp.k)).sqrt();
            (cp.u_c - 4.0 * d / 7.0, cp.u_c + 3.0 * d / 7.0)
        }
    }
}

fn newton_edge(kind: EdgeKind, t: f64, guess: (f64, f64), data: &dyn InitialData) -> Result<(f64, f64)> {
    let cfg = RootConfig { abs_tol: 1e-12, rel_tol: 1e-14, max_iter: 40, bracket: None };
    let out =
        newton_solve(|z| edge_equations(kind, t, z[0], z[1], data).map(|r| r.to_vec()), &[guess.0, guess.1], &cfg)?;
    let (u, v) = (out.x[0], out.x[1]);
    let ordered = match kind {
        EdgeKind::Leading => u > v,
        EdgeKind::Trailing => u < v,
    };
    if !ordered {
        return Err(Error::Branch(format!("edge solve at t = {t} converged to the wrong ordering (u = {u}, v = {v})")));
    }
    Ok((u, v))
}

/// Follows one edge in `σ = √(t - t_c)` with a linear predictor and step
/// halving.
#[derive(Debug, Clone)]
pub struct EdgeTracker<'a> {
    kind: EdgeKind,
    data: &'a dyn InitialData,
    cp: CatastrophePoint,
    /// Last two accepted `(σ, u, v)`.
    hist: Vec<(f64, f64, f64)>,
    pub max_step: f64,
}

impl<'a> EdgeTracker<'a> {
    pub fn new(kind: EdgeKind, data: &'a dyn InitialData) -> Result<Self> {
        let cp = breaking_point(data)?;
        Ok(Self { kind, data, cp, hist: Vec::new(), max_step: 0.02 })
    }

    pub fn catastrophe(&self) -> &CatastrophePoint {
        &self.cp
    }

    fn predict(&self, sigma: f64) -> (f64, f64) {
        match self.hist.as_slice() {
            [.., (s0, u0, v0), (s1, u1, v1)] => {
                let w = (sigma - s1) / (s1 - s0);
                (u1 + w * (u1 - u0), v1 + w * (v1 - v0))
            }
            _ => edge_seed(self.kind, self.cp.t_c + sigma * sigma, &self.cp),
        }
    }

    fn accept(&mut self, sigma: f64, u: f64, v: f64) {
        self.hist.push((sigma, u, v));
        if self.hist.len() > 2 {
            self.hist.remove(0);
        }
    }

    /// Advance to time `t`, which must not lie before the last solved time.
    pub fn advance(&mut self, t: f64) -> Result<EdgeSolution> {
        if !(t > self.cp.t_c) {
            return domain(format!("edge needs t > t_c = {}, got {t}", self.cp.t_c));
        }
        let target = (t - self.cp.t_c).sqrt();
        let mut sigma = self.hist.last().map(|h| h.0).unwrap_or(0.0);
        if target < sigma {
            return domain("edge tracker cannot move backwards in t");
        }
        if self.hist.is_empty() {
            let s0 = target.min(0.01);
            let seed = self.predict(s0);
            let (u, v) = newton_edge(self.kind, self.cp.t_c + s0 * s0, seed, self.data)?;
            self.accept(s0, u, v);
            sigma = s0;
        }
        let mut step = self.max_step;
        let mut halvings = 0;
        while sigma < target {
            let next = (sigma + step).min(target);
            let guess = self.predict(next);
            match newton_edge(self.kind, self.cp.t_c + next * next, guess, self.data) {
                Ok((u, v)) => {
                    self.accept(next, u, v);
                    sigma = next;
                    step = (step * 1.5).min(self.max_step);
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > 12 {
                        let (_, u, v) = *self.hist.last().unwrap();
                        let residual = match e {
                            Error::Convergence { residual, .. } => residual,
                            _ => f64::NAN,
                        };
                        return Err(Error::Convergence {
                            iterations: halvings,
                            residual,
                            last: vec![self.cp.t_c + sigma * sigma, u, v],
                        });
                    }
                    step *= 0.5;
                }
            }
        }
        let (_, u, v) = *self.hist.last().unwrap();
        let r = edge_equations(self.kind, t, u, v, self.data)?;
        let x_edge = 6.0 * t * u + self.data.f_l(u);
        Ok(EdgeSolution { kind: self.kind, t, x_edge, u, v, residual: r[0].abs().max(r[1].abs()) })
    }
}

pub fn solve_leading_edge(t: f64, data: &dyn InitialData) -> Result<EdgeSolution> {
    EdgeTracker::new(EdgeKind::Leading, data)?.advance(t)
}

pub fn solve_trailing_edge(t: f64, data: &dyn InitialData) -> Result<EdgeSolution> {
    EdgeTracker::new(EdgeKind::Trailing, data)?.advance(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub t: f64,
    pub x_minus: f64,
    pub x_plus: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    pub rows: Vec<PhaseRow>,
    /// Set when continuation stopped before the end of the grid.
    pub stopped: Option<(f64, Error)>,
}

/// Both edges along an increasing time grid.
pub fn kdv_phase_diagram(data: &dyn InitialData, t_grid: &[f64]) -> Result<PhaseDiagram> {
    let mut lead = EdgeTracker::new(EdgeKind::Leading, data)?;
    let mut trail = EdgeTracker::new(EdgeKind::Trailing, data)?;
    let t_c = lead.catastrophe().t_c;
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("time grid must increase strictly");
    }
    if let Some(&t0) = t_grid.first() {
        if !(t0 > t_c) {
            return domain(format!("every time must exceed t_c = {t_c}"));
        }
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let step = lead.advance(t).and_then(|l| trail.advance(t).map(|r| (l, r)));
        match step {
            Ok((l, r)) => rows.push(PhaseRow { t, x_minus: l.x_edge, x_plus: r.x_edge }),
            Err(e) => return Ok(PhaseDiagram { rows, stopped: Some((t, e)) }),
        }
    }
    Ok(PhaseDiagram { rows, stopped: None })
}

/// Genus-one ansatz parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticAnsatz {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub q_phase: f64,
    /// True when no phase was supplied and `q = 0` is used.
    pub q_defaulted: bool,
    pub alpha: f64,
    pub s: f64,
    /// Imaginary part of `τ = i K'(s) / K(s)`.
    pub tau_im: f64,
    pub k: f64,
}

impl EllipticAnsatz {
    pub fn new(beta1: f64, beta2: f64, beta3: f64, q_phase: Option<f64>) -> Result<Self> {
        if !(beta1 > beta2 && beta2 > beta3) {
            return domain(format!("need β1 > β2 > β3, got {beta1}, {beta2}, {beta3}"));
        }
        let s2 = (beta2 - beta3) / (beta1 - beta3);
        if s2 >= 1.0 - 1e-14 {
            return domain("elliptic modulus reached 1 (soliton limit)");
        }
        let s = s2.sqrt();
        let (k, e) = complete_elliptic(s)?;
        let (kp, _) = complete_elliptic((1.0 - s2).sqrt())?;
        let alpha = -beta1 + (beta1 - beta3) * e / k;
        Ok(Self {
            beta1,
            beta2,
            beta3,
            q_phase: q_phase.unwrap_or(0.0),
            q_defaulted: q_phase.is_none(),
            alpha,
            s,
            tau_im: kp / k,
            k,
        })
    }

    /// `β1 + β2 + β3 + 2α`.
    pub fn weak_limit(&self) -> f64 {
        self.beta1 + self.beta2 + self.beta3 + 2.0 * self.alpha
    }

    /// Spatial period of the oscillation.
    pub fn period(&self, eps: f64) -> f64 {
        2.0 * eps * self.k / (self.beta1 - self.beta3).sqrt()
    }
}

/// Weak limit plus `2ε² ∂²_x log ϑ` with the derivative taken term by term.
pub fn elliptic_approx(x: f64, t: f64, eps: f64, a: &EllipticAnsatz) -> Result<f64> {
    if !(eps > 0.0) {
        return domain("eps must be positive");
    }
    let scale = (a.beta1 - a.beta3).sqrt() / (2.0 * eps * a.k);
    let z = scale * (x - 2.0 * t * (a.beta1 + a.beta2 + a.beta3) - a.q_phase);
    let th = theta3_full(z, a.tau_im)?;
    let d2log = (th.d2 / th.value - (th.d1 / th.value).powi(2)) * scale * scale;
    Ok(a.weak_limit() + 2.0 * eps * eps * d2log)
}

/// Scaled variables `(X, T)` at the catastrophe.
pub fn catastrophe_scaling(x: f64, t: f64, eps: f64, cp: &CatastrophePoint) -> (f64, f64) {
    let xs = (x - cp.x_c - 6.0 * cp.u_c * (t - cp.t_c)) / (8.0 * cp.k * eps.powi(6)).powf(1.0 / 7.0);
    let ts = 6.0 * (t - cp.t_c) / (4.0 * cp.k.powi(3) * eps.powi(4)).powf(1.0 / 7.0);
    (xs, ts)
}

/// The catastrophe expansion at fixed `(t, ε)` with its `P_I²` solution.
#[derive(Debug, Clone)]
pub struct CatastropheExpansion {
    pub cp: CatastrophePoint,
    pub t: f64,
    pub eps: f64,
    pub pi2: PI2Solution,
}

impl CatastropheExpansion {
    pub fn new(t: f64, eps: f64, cp: CatastrophePoint) -> Result<Self> {
        if !(eps > 0.0) {
            return domain("eps must be positive");
        }
        let (_, ts) = catastrophe_scaling(cp.x_c, t, eps, &cp);
        let pi2 = solve_pi2(ts, 50.0, 6401)?;
        Ok(Self { cp, t, eps, pi2 })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (xs, _) = catastrophe_scaling(x, self.t, self.eps, &self.cp);
        let amp = (2.0 * self.eps * self.eps / (self.cp.k * self.cp.k)).powf(1.0 / 7.0);
        self.cp.u_c + amp * eval_pi2(&self.pi2, xs).value
    }
}

pub fn catastrophe_approx(x: f64, t: f64, eps: f64, cp: &CatastrophePoint) -> Result<f64> {
    Ok(CatastropheExpansion::new(t, eps, *cp)?.eval(x))
}

pub(crate) fn shared_hm() -> Result<&'static HMGrid> {
    static GRID: OnceLock<std::result::Result<HMGrid, Error>> = OnceLock::new();
    GRID.get_or_init(|| solve_hastings_mcleod(10.0, 2001)).as_ref().map_err(Clone::clone)
}

/// Constants of the leading-edge expansion for one edge solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingEdgeConstants {
    /// `c = -√(u - v) ∂²_v θ(v; u)`.
    pub c: f64,
    /// `2 ∫_v^u (f_L'(ξ) + 6t) √(ξ - v) dξ`.
    pub theta_integral: f64,
}

pub fn leading_edge_constants(edge: &EdgeSolution, data: &dyn InitialData) -> Result<LeadingEdgeConstants> {
    if edge.kind != EdgeKind::Leading {
        return domain("leading-edge expansion needs a leading edge");
    }
    let (u, v, t) = (edge.u, edge.v, edge.t);
    let th = theta_full(v, u, data)?;
    let c = -(u - v).sqrt() * th.d2_lambda;
    if !(c > 0.0) {
        return Err(Error::Genericity(format!("leading-edge constant c = {c:.3e} is not positive")));
    }
    let integral = sqrt_weighted(v, u, &|xi| Ok(data.f_l_deriv(xi, 1) + 6.0 * t))?;
    Ok(LeadingEdgeConstants { c, theta_integral: 2.0 * integral })
}

/// Phase `Θ(x, t)` and Painlevé variable `s(x, t, ε)`.
pub fn leading_edge_phase(x: f64, eps: f64, edge: &EdgeSolution, k: &LeadingEdgeConstants) -> (f64, f64) {
    let w = (edge.u - edge.v).sqrt();
    let theta = 2.0 * w * (x - edge.x_edge) + k.theta_integral;
    let s = -(x - edge.x_edge) / (k.c.cbrt() * w * eps.powf(2.0 / 3.0));
    (theta, s)
}

pub fn leading_edge_approx_with(x: f64, eps: f64, edge: &EdgeSolution, k: &LeadingEdgeConstants, hm: &HMGrid) -> f64 {
    let (theta, s) = leading_edge_phase(x, eps, edge, k);
    edge.u - 4.0 * eps.cbrt() / k.c.cbrt() * eval_hm(hm, s).value * (theta / eps).cos()
}

pub fn leading_edge_approx(x: f64, t: f64, eps: f64, edge: &EdgeSolution, data: &dyn InitialData) -> Result<f64> {
    if !(eps > 0.0) {
        return domain("eps must be positive");
    }
    if (edge.t - t).abs() > 1e-14 * t.abs().max(1.0) {
        return domain("edge solution belongs to a different time");
    }
    let k = leading_edge_constants(edge, data)?;
    Ok(leading_edge_approx_with(x, eps, edge, &k, shared_hm()?))
}

/// `h_k = 2^{k/2} / (π^{1/4} √k!)`.
pub fn hermite_norm(k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    (0.5 * k as f64 * std::f64::consts::LN_2 - 0.25 * std::f64::consts::PI.ln() - 0.5 * ln_fact).exp()
}

fn ln_hermite_norm(k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    0.5 * k as f64 * std::f64::consts::LN_2 - 0.25 * std::f64::consts::PI.ln() - 0.5 * ln_fact
}

/// `γ = 4 (v - u)^{5/4} √(-∂_v θ(v; u))`.
pub fn trailing_gamma(edge: &EdgeSolution, data: &dyn InitialData) -> Result<f64> {
    if edge.kind != EdgeKind::Trailing {
        return domain("trailing-edge expansion needs a trailing edge");
    }
    let th = theta_full(edge.v, edge.u, data)?;
    if !(-th.d_lambda > 0.0) {
        return Err(Error::Genericity(format!("-∂_vθ = {:.3e} is not positive", -th.d_lambda)));
    }
    Ok(4.0 * (edge.v - edge.u).powf(1.25) * (-th.d_lambda).sqrt())
}

/// `(slope_k, offset_k)` with `X_k = slope_k ln ε + offset_k`.
pub fn trailing_phase(k: usize, y: f64, gamma: f64) -> (f64, f64) {
    let kf = k as f64;
    let slope = 0.5 * (0.5 - y + kf);
    let offset = -(0.5 * (2.0 * std::f64::consts::PI).ln() + ln_hermite_norm(k)) - (kf + 0.5) * gamma.ln();
    (slope, offset)
}

/// Soliton-train sum at `x = x⁺ + ε ln ε y / (2√(v - u))`.
pub fn trailing_edge_sum(y: f64, eps: f64, edge: &EdgeSolution, gamma: f64) -> Result<TrainSum> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain("trailing-edge expansion needs 0 < eps < 1");
    }
    let phase = |k: usize| trailing_phase(k, y, gamma);
    sech2_train(edge.u, 2.0 * (edge.v - edge.u), eps.ln(), &phase, 100_000)
}

pub fn trailing_edge_approx(y: f64, t: f64, eps: f64, edge: &EdgeSolution, data: &dyn InitialData) -> Result<f64> {
    if (edge.t - t).abs() > 1e-14 * t.abs().max(1.0) {
        return domain("edge solution belongs to a different time");
    }
    let gamma = trailing_gamma(edge, data)?;
    Ok(trailing_edge_sum(y, eps, edge, gamma)?.value)
}

/// Position `x` corresponding to the trailing-edge variable `y`.
pub fn trailing_x(y: f64, eps: f64, edge: &EdgeSolution) -> f64 {
    edge.x_edge + eps * eps.ln() * y / (2.0 * (edge.v - edge.u).sqrt())
}
