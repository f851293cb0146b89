//! Equilibrium measures for the quartic family
//! `V_{x,t}(s) = e^x [(1-t) s²/2 + t (s⁴/20 - 4s³/15 + s²/5 + 8s/5)]`,
//! the variational conditions, singularity classification and the phase
//! diagram in the `(x, t)` plane.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::numerics::poly::Poly;
use crate::numerics::quadrature::{adaptive_legendre, cached_gauss_jacobi};
use crate::numerics::roots::{golden_min, newton_solve, RootConfig};

/// Threshold on normalised `h` and on exterior margins.
pub const SINGULAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticField {
    pub x: f64,
    pub t: f64,
}

impl QuarticField {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        if !x.is_finite() || !t.is_finite() {
            return domain("field parameters must be finite");
        }
        Ok(Self { x, t })
    }

    /// `V` as a polynomial in `s`.
    pub fn potential(&self) -> Poly {
        let e = self.x.exp();
        let t = self.t;
        Poly::new(vec![0.0, e * 8.0 * t / 5.0, e * (0.5 * (1.0 - t) + t / 5.0), -e * 4.0 * t / 15.0, e * t / 20.0])
    }
}

/// `(V, V', V'')` at `s`.
pub fn field_eval(f: &QuarticField, s: f64) -> (f64, f64, f64) {
    let v = f.potential();
    let d1 = v.derivative();
    let d2 = d1.derivative();
    (v.eval(s), d1.eval(s), d2.eval(s))
}

/// Density `Π_j √((b_j - s)(s - a_j)) · h(s)` on the union of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    pub intervals: Vec<(f64, f64)>,
    pub h: Poly,
    /// Lagrange constant `ℓ_V`, found by quadrature at the support midpoint.
    pub ell: f64,
}

impl EquilibriumMeasure {
    fn one_cut(a: f64, b: f64, h: Poly, field: &QuarticField) -> Result<Self> {
        if !(a < b) {
            return domain(format!("empty support [{a}, {b}]"));
        }
        let mut mu = Self { intervals: vec![(a, b)], h, ell: 0.0 };
        mu.ell = log_potential(&mu, 0.5 * (a + b))? - field.potential().eval(0.5 * (a + b));
        Ok(mu)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals.last().unwrap().1)
    }

    pub fn density(&self, s: f64) -> f64 {
        for &(a, b) in &self.intervals {
            if s >= a && s <= b {
                let root: f64 = self.intervals.iter().map(|&(a, b)| ((b - s) * (s - a)).abs().sqrt()).product();
                return root * self.h.eval(s);
            }
        }
        0.0
    }

    /// Total mass by Gauss–Jacobi (`α = β = 1/2`), exact for one interval.
    pub fn mass(&self) -> Result<f64> {
        if self.intervals.len() != 1 {
            return domain("mass is implemented for one-interval measures");
        }
        let (a, b) = self.intervals[0];
        let r = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let rule = cached_gauss_jacobi(self.h.degree() / 2 + 4, 0.5, 0.5)?;
        Ok(r * r * rule.integrate(|y| self.h.eval(c + r * y)))
    }
}

/// Gaussian family `t = 0`: semicircle on `[-2e^{-x/2}, 2e^{-x/2}]`.
pub fn measure_gaussian(x: f64) -> Result<EquilibriumMeasure> {
    let b = 2.0 * (-0.5 * x).exp();
    EquilibriumMeasure::one_cut(-b, b, Poly::constant(x.exp() / (2.0 * PI)), &QuarticField::new(x, 0.0)?)
}

/// `x = 0`, `0 < t ≤ 1`: `((s-2)² + γ²) √(4 - s²) / (2π(5 + γ²))` on `[-2, 2]`.
pub fn measure_line_t(t: f64) -> Result<EquilibriumMeasure> {
    if !(t > 0.0 && t <= 1.0) {
        return domain(format!("measure_line_t needs 0 < t <= 1, got {t}"));
    }
    let g2 = 5.0 / t - 5.0;
    let h = Poly::new(vec![4.0 + g2, -4.0, 1.0]).scale(1.0 / (2.0 * PI * (5.0 + g2)));
    EquilibriumMeasure::one_cut(-2.0, 2.0, h, &QuarticField::new(0.0, t)?)
}

/// `x* = -log(245/9)`.
pub fn x_star() -> f64 {
    -(245.0f64 / 9.0).ln()
}

/// Half-width `b(x)` and constant `C(x)` of the `t = 9` family.
pub fn t9_parameters(x: f64) -> (f64, f64) {
    let ex = x.exp();
    let b2 = 140.0 / 27.0 + 4.0 / 27.0 * 5f64.sqrt() / ex * (27.0 * ex + 245.0 * ex * ex).sqrt();
    let b = b2.sqrt();
    let c = (80.0 - 9.0 * b2 * b2 * ex) / (36.0 * b2 * ex);
    (b, c)
}

/// `t = 9`, `x ≤ x*`: `8 ((s - 4/3)² + C) √(...) / (π b² (b² + 4C))`.
pub fn measure_t9(x: f64) -> Result<EquilibriumMeasure> {
    let xs = x_star();
    if x > xs + 1e-14 * xs.abs() {
        return Err(Error::OutOfRegime(format!("x = {x} > x* = {xs}: field presumed two-cut")));
    }
    let (b, c) = t9_parameters(x);
    let s0 = 4.0 / 3.0;
    let h = Poly::new(vec![s0 * s0 + c, -2.0 * s0, 1.0]).scale(8.0 / (PI * b * b * (b * b + 4.0 * c)));
    EquilibriumMeasure::one_cut(s0 - b, s0 + b, h, &QuarticField::new(x, 9.0)?)
}

/// `2 ∫ log|s - y| dμ(y)` for a one-interval measure.
pub fn log_potential(mu: &EquilibriumMeasure, s: f64) -> Result<f64> {
    if mu.intervals.len() != 1 {
        return domain("log potential is implemented for one-interval measures");
    }
    let (a, b) = mu.intervals[0];
    let r = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    // y = c - r cos θ; dμ = h(y) r² sin² θ dθ. With θ = θ_s + δ the
    // distance is |2r sin(θ_s + δ/2) sin(δ/2)|, which stays accurate as δ → 0.
    let inside = s >= a && s <= b;
    let ts = if inside { ((c - s) / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
    let g = |delta: f64, base: f64| {
        let th = base + delta;
        let sn = th.sin();
        let y = c - r * th.cos();
        let d = if inside { (2.0 * r * (ts + 0.5 * delta).sin() * (0.5 * delta).sin()).abs() } else { (s - y).abs() };
        if d == 0.0 {
            0.0
        } else {
            d.ln() * mu.h.eval(y) * r * r * sn * sn
        }
    };
    let scale = r * r * (mu.h.eval(c).abs() + mu.h.eval(a).abs() + mu.h.eval(b).abs()).max(1e-300);
    let tol = 1e-14 * scale.max(1.0);
    // δ = ±len·u³ moves the log singularity to u = 0 with weight u².
    let graded = |base: f64, len: f64| -> Result<f64> {
        let k = |u: f64| g(len * u * u * u, base) * 3.0 * len.abs() * u * u;
        adaptive_legendre(&k, 0.0, 1.0, tol)
    };
    let total = if inside {
        graded(ts, -ts)? + graded(ts, PI - ts)?
    } else {
        let (base, len) = if s < a { (0.0, PI) } else { (PI, -PI) };
        graded(base, len)?
    };
    Ok(2.0 * total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalCheck {
    /// Max deviation of `2∫log|s-y|dμ - V` from its mean on the support.
    pub eq_residual: f64,
    /// `min (ℓ - lhs)` over the exterior probes; negative means violation.
    pub ineq_margin: f64,
    /// Mean of the left-hand side over the support probes.
    pub ell: f64,
}

pub fn variational_residual(mu: &EquilibriumMeasure, f: &QuarticField, probe_grid: &[f64]) -> Result<VariationalCheck> {
    let (a, b) = mu.support();
    let v = f.potential();
    let lhs = |s: f64| log_potential(mu, s).map(|l| l - v.eval(s));
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for &s in probe_grid {
        if s >= a && s <= b {
            inside.push(lhs(s)?);
        } else {
            outside.push(lhs(s)?);
        }
    }
    if inside.is_empty() {
        return domain("probe grid does not meet the support");
    }
    let ell = inside.iter().sum::<f64>() / inside.len() as f64;
    let eq_residual = inside.iter().fold(0.0f64, |m, l| m.max((l - ell).abs()));
    let ineq_margin = outside.iter().fold(f64::INFINITY, |m, l| m.min(ell - l));
    Ok(VariationalCheck { eq_residual, ineq_margin, ell })
}

/// Probe grid with `n` points on the support and `n` on each side out to
/// distance `reach`.
pub fn default_probes(mu: &EquilibriumMeasure, n: usize, reach: f64) -> Vec<f64> {
    let (a, b) = mu.support();
    let mut g = Vec::with_capacity(3 * n);
    for i in 0..n {
        let th = PI * (i as f64 + 0.5) / n as f64;
        g.push(0.5 * (a + b) - 0.5 * (b - a) * th.cos());
    }
    for i in 1..=n {
        let d = reach * i as f64 / n as f64;
        g.push(a - d);
        g.push(b + d);
    }
    g
}

/// Coefficients `e_i(a) = binom(2i, i) (a/4)^i` of `(1 - a w)^{-1/2}`.
fn half_binomial_series(a: f64, n: usize) -> Vec<f64> {
    let mut e = vec![1.0; n];
    for i in 1..n {
        e[i] = e[i - 1] * a * (2 * i - 1) as f64 / (2 * i) as f64;
    }
    e
}

/// Laurent coefficients of `1/√((z-a)(z-b)) = Σ c_n z^{-n-1}`.
fn inverse_root_series(a: f64, b: f64, n: usize) -> Vec<f64> {
    let ea = half_binomial_series(a, n);
    let eb = half_binomial_series(b, n);
    (0..n).map(|k| (0..=k).map(|i| ea[i] * eb[k - i]).sum()).collect()
}

/// One-cut conditions: the `z^{-1}` and `z^{-2}` coefficients of
/// `V'(z)/√((z-a)(z-b))` at infinity must be `0` and `2`.
fn onecut_conditions(dv: &Poly, a: f64, b: f64) -> [f64; 2] {
    let c = inverse_root_series(a, b, dv.degree() + 3);
    let d1: f64 = (0..=dv.degree()).map(|m| dv.coeff(m) * c[m]).sum();
    let d2: f64 = (0..=dv.degree()).map(|m| dv.coeff(m) * c[m + 1]).sum();
    [d1, d2 - 2.0]
}

/// `h = (1/2π) · [V'(z)/√((z-a)(z-b))]_+`.
fn onecut_h(dv: &Poly, a: f64, b: f64) -> Poly {
    let deg = dv.degree();
    let c = inverse_root_series(a, b, deg + 1);
    let coeffs: Vec<f64> =
        (0..deg).map(|k| ((k + 1)..=deg).map(|m| dv.coeff(m) * c[m - k - 1]).sum::<f64>() / (2.0 * PI)).collect();
    Poly::new(coeffs)
}

/// Endpoints and density polynomial of a one-cut candidate; `h` may be
/// negative somewhere if the field is not one-cut.
#[derive(Debug, Clone, PartialEq)]
pub struct OneCutCandidate {
    pub a: f64,
    pub b: f64,
    pub h: Poly,
    /// Minimum of `h / max|h|` over `[a, b]`.
    pub h_min_normalised: f64,
    pub h_argmin: f64,
}

fn normalised_min(h: &Poly, a: f64, b: f64) -> (f64, f64) {
    let n = 400;
    let vals: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let s = a + (b - a) * i as f64 / n as f64;
            (s, h.eval(s))
        })
        .collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.1.abs()));
    let mut best = vals.iter().cloned().fold((a, f64::INFINITY), |m, v| if v.1 < m.1 { v } else { m });
    let mut candidates = vec![a, b];
    candidates.extend(h.derivative().real_roots_in(a, b, 400));
    for s in candidates {
        let v = h.eval(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    if scale == 0.0 {
        return (best.0, 0.0);
    }
    (best.0, best.1 / scale)
}

fn global_minimiser(v: &Poly) -> f64 {
    let roots = v.derivative().real_roots_in(-50.0, 50.0, 20_000);
    roots
        .into_iter()
        .fold((0.0, f64::INFINITY), |m, s| {
            let val = v.eval(s);
            if val < m.1 {
                (s, val)
            } else {
                m
            }
        })
        .0
}

/// Newton solve of the one-cut conditions from several seeds; returns the
/// candidate with the largest `min h`.
pub fn onecut_candidate(f: &QuarticField) -> Result<OneCutCandidate> {
    let v = f.potential();
    let dv = v.derivative();
    let c0 = global_minimiser(&v);
    let curv = dv.derivative().eval(c0).abs().max(1e-3);
    let w0 = 2.0 / curv.sqrt();
    let cfg = RootConfig { abs_tol: 1e-13, rel_tol: 1e-15, max_iter: 80, bracket: None };
    let mut best: Option<OneCutCandidate> = None;
    for &shift in &[0.0, -0.5, 0.5] {
        for &scale in &[1.0, 0.5, 1.5, 2.0, 3.0] {
            let (a0, b0) = (c0 + shift * w0 - scale * w0, c0 + shift * w0 + scale * w0);
            let Ok(out) = newton_solve(|z| Ok(onecut_conditions(&dv, z[0], z[1]).to_vec()), &[a0, b0], &cfg) else {
                continue;
            };
            let (a, b) = (out.x[0], out.x[1]);
            if !(b - a > 1e-8) || out.residual > 1e-10 {
                continue;
            }
            let h = onecut_h(&dv, a, b);
            let (h_argmin, h_min_normalised) = normalised_min(&h, a, b);
            let cand = OneCutCandidate { a, b, h, h_min_normalised, h_argmin };
            let better = match &best {
                None => true,
                Some(bst) => cand.h_min_normalised > bst.h_min_normalised + 1e-12,
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::NotOneCut(format!("no one-cut endpoints found for {f:?}")))
}

/// Endpoints of the support of a one-cut equilibrium measure.
pub fn solve_onecut_endpoints(f: &QuarticField) -> Result<(f64, f64)> {
    let c = onecut_candidate(f)?;
    if c.h_min_normalised < -SINGULAR_TOL {
        return Err(Error::NotOneCut(format!(
            "density negative near s = {:.6} (normalised h = {:.3e})",
            c.h_argmin, c.h_min_normalised
        )));
    }
    Ok((c.a, c.b))
}

/// One-cut equilibrium measure from the endpoint solve.
pub fn solve_onecut_measure(f: &QuarticField) -> Result<EquilibriumMeasure> {
    let (a, b) = solve_onecut_endpoints(f)?;
    let h = onecut_h(&f.potential().derivative(), a, b);
    let mu = EquilibriumMeasure::one_cut(a, b, h, f)?;
    let m = mu.mass()?;
    if (m - 1.0).abs() > 1e-8 {
        return Err(Error::NotOneCut(format!("endpoint solve gives mass {m}")));
    }
    Ok(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularityKind {
    None,
    ExteriorI,
    InteriorII,
    EdgeIII,
}

impl SingularityKind {
    pub fn label(&self) -> &'static str {
        match self {
            SingularityKind::None => "none",
            SingularityKind::ExteriorI => "exterior_I",
            SingularityKind::InteriorII => "interior_II",
            SingularityKind::EdgeIII => "edge_III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub kind: SingularityKind,
    pub location: f64,
    /// The smallest of the three defining quantities.
    pub margin: f64,
    /// More than one condition triggered.
    pub ambiguous: bool,
}

/// Smallest `ℓ - (2∫log|s-y|dμ - V)` over `dist ≤ |s - support| ≤ dist + reach`.
fn exterior_minimum(mu: &EquilibriumMeasure, f: &QuarticField, dist: f64, reach: f64) -> Result<(f64, f64)> {
    let (a, b) = mu.support();
    let v = f.potential();
    let gap = |s: f64| log_potential(mu, s).map(|l| mu.ell - (l - v.eval(s)));
    let n = 120;
    let mut best = (a - dist, f64::INFINITY, 0.0);
    for side in [-1.0, 1.0] {
        let base = if side < 0.0 { a } else { b };
        let h = reach / n as f64;
        for i in 0..=n {
            let s = base + side * (dist + h * i as f64);
            let g = gap(s)?;
            if g < best.1 {
                best = (s, g, side * h);
            }
        }
    }
    let (s0, _, h) = best;
    let (lo, hi) = (s0 - h.abs(), s0 + h.abs());
    let (lo, hi) = if s0 < a { (lo, hi.min(a - dist)) } else { (lo.max(b + dist), hi) };
    let (s, g) = golden_min(|s| gap(s).unwrap_or(f64::INFINITY), lo, hi, 1e-9);
    Ok(if g < best.1 { (s, g) } else { (best.0, best.1) })
}

pub fn classify(mu: &EquilibriumMeasure, f: &QuarticField) -> Result<SingularityReport> {
    let (a, b) = mu.support();
    let w = b - a;
    let scale = {
        let n = 400;
        (0..=n).map(|i| mu.h.eval(a + w * i as f64 / n as f64).abs()).fold(0.0f64, f64::max)
    };
    if scale == 0.0 {
        return domain("density polynomial vanishes identically");
    }
    let edge = [(a, mu.h.eval(a) / scale), (b, mu.h.eval(b) / scale)];
    let edge_min = if edge[0].1 <= edge[1].1 { edge[0] } else { edge[1] };
    let delta = 1e-3 * w;
    let interior =
        mu.h.derivative()
            .real_roots_in(a + delta, b - delta, 400)
            .into_iter()
            .map(|s| (s, mu.h.eval(s) / scale))
            .fold((0.5 * (a + b), f64::INFINITY), |m, v| if v.1 < m.1 { v } else { m });
    let exterior = exterior_minimum(mu, f, 0.02 * w, 3.0)?;

    let mut hits: Vec<(SingularityKind, f64, f64)> = Vec::new();
    if exterior.1 < SINGULAR_TOL {
        hits.push((SingularityKind::ExteriorI, exterior.0, exterior.1.abs()));
    }
    if interior.1.abs() < SINGULAR_TOL {
        hits.push((SingularityKind::InteriorII, interior.0, interior.1.abs()));
    }
    if edge_min.1.abs() < SINGULAR_TOL {
        hits.push((SingularityKind::EdgeIII, edge_min.0, edge_min.1.abs()));
    }
    hits.sort_by(|x, y| x.2.total_cmp(&y.2));
    let margin_all = exterior.1.min(interior.1).min(edge_min.1);
    Ok(match hits.first() {
        Some(&(kind, location, margin)) => SingularityReport { kind, location, margin, ambiguous: hits.len() > 1 },
        None => {
            let location = if margin_all == exterior.1 {
                exterior.0
            } else if margin_all == interior.1 {
                interior.0
            } else {
                edge_min.0
            };
            SingularityReport { kind: SingularityKind::None, location, margin: margin_all, ambiguous: false }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    OneCut(SingularityReport),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub x: f64,
    pub t: f64,
    pub status: CellStatus,
    /// Signed distance to a breaking curve: the smallest of the normalised
    /// `min h` and the exterior margin. Negative beyond the one-cut region.
    pub margin: f64,
    pub support: Option<(f64, f64)>,
}

/// Signed one-cut margin of a field (see [`PhaseCell::margin`]).
pub fn onecut_margin(f: &QuarticField) -> Result<f64> {
    let c = onecut_candidate(f)?;
    if c.h_min_normalised < 0.0 {
        return Ok(c.h_min_normalised);
    }
    let mu = EquilibriumMeasure::one_cut(c.a, c.b, c.h.clone(), f)?;
    let ext = exterior_minimum(&mu, f, 0.02 * (c.b - c.a), 3.0)?.1;
    Ok(c.h_min_normalised.min(ext))
}

fn phase_cell(x: f64, t: f64) -> PhaseCell {
    let run = || -> Result<(SingularityReport, f64, (f64, f64))> {
        let f = QuarticField::new(x, t)?;
        let margin = onecut_margin(&f)?;
        let mu = solve_onecut_measure(&f)?;
        let rep = classify(&mu, &f)?;
        Ok((rep, margin, mu.support()))
    };
    match run() {
        Ok((rep, margin, support)) => {
            PhaseCell { x, t, status: CellStatus::OneCut(rep), margin, support: Some(support) }
        }
        Err(e) => {
            let margin = QuarticField::new(x, t).and_then(|f| onecut_margin(&f)).unwrap_or(f64::NAN);
            PhaseCell { x, t, status: CellStatus::Failed(e.to_string()), margin, support: None }
        }
    }
}

/// Classification table over `x_grid × t_grid`, rows ordered by `t` then `x`.
pub fn rmt_phase_diagram(x_grid: &[f64], t_grid: &[f64]) -> Vec<PhaseCell> {
    let cells: Vec<(f64, f64)> = t_grid.iter().flat_map(|&t| x_grid.iter().map(move |&x| (x, t))).collect();
    cells.par_iter().map(|&(x, t)| phase_cell(x, t)).collect()
}

/// Bisection on the sign of [`onecut_margin`] along `x` at fixed `t`.
pub fn locate_breaking_x(t: f64, x_lo: f64, x_hi: f64, tol: f64) -> Result<f64> {
    let m = |x: f64| QuarticField::new(x, t).and_then(|f| onecut_margin(&f));
    let (mut lo, mut hi) = (x_lo, x_hi);
    let (mlo, mhi) = (m(lo)?, m(hi)?);
    if mlo.signum() == mhi.signum() {
        return domain(format!("one-cut margin does not change sign on [{x_lo}, {x_hi}] at t = {t}"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let mm = m(mid)?;
        if mm.signum() == mlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn field_values() {
        let f = QuarticField::new(0.0, 0.0).unwrap();
        for s in [-1.5, 0.0, 2.0] {
            assert_relative_eq!(field_eval(&f, s).0, 0.5 * s * s, epsilon = 1e-15);
        }
        let g = QuarticField::new(0.3, 9.0).unwrap();
        let v = g.potential();
        assert!(v.derivative().eval(4.0 / 3.0).abs() < 1e-13);
        assert!(v.nth_derivative(3).eval(4.0 / 3.0).abs() < 1e-13);
        let (val, _, _) = field_eval(&QuarticField::new(0.0, 1.0).unwrap(), 2.0);
        assert_relative_eq!(val, 16.0 / 20.0 - 32.0 / 15.0 + 4.0 / 5.0 + 16.0 / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn explicit_masses() {
        for x in [-1.0, 0.0, 1.0] {
            assert!((measure_gaussian(x).unwrap().mass().unwrap() - 1.0).abs() < 1e-12);
        }
        for t in [0.25, 0.5, 1.0] {
            assert!((measure_line_t(t).unwrap().mass().unwrap() - 1.0).abs() < 1e-12);
        }
        let xs = x_star();
        for x in [xs - 2.0, xs - 1.0, xs] {
            assert!((measure_t9(x).unwrap().mass().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t9_constants_at_x_star() {
        let (b, c) = t9_parameters(x_star());
        assert_relative_eq!(b, 2.0 / 3.0 * 35f64.sqrt(), epsilon = 1e-13);
        assert!(c.abs() < 1e-12);
        let (_, c1) = t9_parameters(x_star() - 1.0);
        assert!(c1 > 0.0);
        assert!(matches!(measure_t9(x_star() + 0.1), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn line_t_range() {
        assert!(measure_line_t(0.0).is_err());
        assert!(measure_line_t(1.5).is_err());
        let mu = measure_line_t(0.5).unwrap();
        assert!(mu.h.eval(2.0) > 0.0);
        let mu1 = measure_line_t(1.0).unwrap();
        assert!(mu1.h.eval(2.0).abs() < 1e-15);
    }

    #[test]
    fn semicircle_variational() {
        let mu = measure_gaussian(0.0).unwrap();
        let f = QuarticField::new(0.0, 0.0).unwrap();
        let chk = variational_residual(&mu, &f, &default_probes(&mu, 40, 3.0)).unwrap();
        assert!(chk.eq_residual < 1e-8, "{chk:?}");
        assert!(chk.ineq_margin > 0.0);
        assert!((chk.ell - mu.ell).abs() < 1e-8);
    }

    #[test]
    fn wrong_measure_detected() {
        let mu = measure_gaussian(0.0).unwrap();
        let f = QuarticField::new(0.0, 1.0).unwrap();
        let chk = variational_residual(&mu, &f, &default_probes(&mu, 40, 3.0)).unwrap();
        assert!(chk.eq_residual > 1e-2);
    }

    #[test]
    fn explicit_families_satisfy_variational_conditions() {
        let xs = x_star();
        let cases: Vec<(EquilibriumMeasure, QuarticField)> = vec![
            (measure_gaussian(-1.0).unwrap(), QuarticField::new(-1.0, 0.0).unwrap()),
            (measure_line_t(0.25).unwrap(), QuarticField::new(0.0, 0.25).unwrap()),
            (measure_line_t(1.0).unwrap(), QuarticField::new(0.0, 1.0).unwrap()),
            (measure_t9(xs - 1.0).unwrap(), QuarticField::new(xs - 1.0, 9.0).unwrap()),
            (measure_t9(xs).unwrap(), QuarticField::new(xs, 9.0).unwrap()),
        ];
        for (mu, f) in cases {
            let chk = variational_residual(&mu, &f, &default_probes(&mu, 30, 3.0)).unwrap();
            assert!(chk.eq_residual < 1e-8, "{f:?}: {chk:?}");
            assert!(chk.ineq_margin >= 0.0, "{f:?}: {chk:?}");
        }
    }

    #[test]
    fn endpoints_gaussian() {
        let (a, b) = solve_onecut_endpoints(&QuarticField::new(0.0, 0.0).unwrap()).unwrap();
        assert!((a + 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints_match_t9_formula() {
        let xs = x_star();
        for x in [xs - 2.0, xs - 1.0, xs] {
            let f = QuarticField::new(x, 9.0).unwrap();
            let (a, b) = solve_onecut_endpoints(&f).unwrap();
            let (bx, _) = t9_parameters(x);
            assert!((a - (4.0 / 3.0 - bx)).abs() < 1e-8 && (b - (4.0 / 3.0 + bx)).abs() < 1e-8, "{x}: {a} {b}");
            let r = onecut_conditions(&f.potential().derivative(), a, b);
            assert!(r[0].abs() < 1e-10 && r[1].abs() < 1e-10);
        }
    }

    #[test]
    fn solved_measure_matches_line_t() {
        for t in [0.25, 0.5, 1.0] {
            let f = QuarticField::new(0.0, t).unwrap();
            let mu = solve_onecut_measure(&f).unwrap();
            let exact = measure_line_t(t).unwrap();
            for s in [-1.9, -0.3, 0.7, 1.99] {
                assert!((mu.density(s) - exact.density(s)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn classification_table() {
        let r = classify(&measure_line_t(1.0).unwrap(), &QuarticField::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(r.kind, SingularityKind::EdgeIII);
        assert!((r.location - 2.0).abs() < 1e-12);
        let xs = x_star();
        let r = classify(&measure_t9(xs).unwrap(), &QuarticField::new(xs, 9.0).unwrap()).unwrap();
        assert_eq!(r.kind, SingularityKind::InteriorII);
        assert!((r.location - 4.0 / 3.0).abs() < 1e-6);
        let r = classify(&measure_t9(xs - 1.0).unwrap(), &QuarticField::new(xs - 1.0, 9.0).unwrap()).unwrap();
        assert_eq!(r.kind, SingularityKind::None);
        assert!(r.margin > SINGULAR_TOL);
    }

    #[test]
    fn breaking_on_t9_row_at_x_star() {
        let x = locate_breaking_x(9.0, x_star() - 1.0, x_star() + 1.0, 1e-6).unwrap();
        assert!((x - x_star()).abs() < 1e-5, "{x} vs {}", x_star());
    }

    #[test]
    fn support_grows_as_x_decreases() {
        let cells = rmt_phase_diagram(&[-2.0, -1.0, 0.0, 1.0], &[0.5]);
        let widths: Vec<f64> = cells.iter().map(|c| c.support.map(|(a, b)| b - a).unwrap()).collect();
        assert!(widths.windows(2).all(|w| w[0] > w[1]), "{widths:?}");
    }

    #[test]
    fn phase_cell_at_type_three_point() {
        let cells = rmt_phase_diagram(&[0.0], &[1.0]);
        match &cells[0].status {
            CellStatus::OneCut(r) => assert_eq!(r.kind, SingularityKind::EdgeIII),
            CellStatus::Failed(e) => panic!("{e}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn explicit_densities_nonnegative(x in -3.0f64..1.0, t in 0.05f64..1.0, dx in 0.0f64..3.0) {
            let mus = [measure_gaussian(x).unwrap(), measure_line_t(t).unwrap(), measure_t9(x_star() - dx).unwrap()];
            for mu in &mus {
                let (a, b) = mu.support();
                for i in 0..1000 {
                    let s = a + (b - a) * (i as f64 + 0.5) / 1000.0;
                    prop_assert!(mu.density(s) >= 0.0);
                }
                prop_assert!((mu.mass().unwrap() - 1.0).abs() < 1e-10);
            }
        }
    }
}
