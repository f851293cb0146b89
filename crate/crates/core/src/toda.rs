//! Toda lattice and hierarchy flows on recurrence coefficients, the
//! discrete string equation, and the dispersionless limit: Riemann
//! invariants, hodograph solution and the constants of its catastrophe.
//!
//! Lattices are truncated to `β_0..β_M`, `γ_1..γ_M` with `γ_0 = γ_{M+1} = 0`,
//! which makes every flow an exact isospectral deformation of the finite
//! Jacobi matrix `Q`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::numerics::poly::Poly;
use crate::numerics::roots::{newton_solve, RootConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TodaState {
    pub eps: f64,
    /// `gamma[n] = γ_n` for `1 ≤ n ≤ M`; `gamma[0] = 0`.
    pub gamma: Vec<f64>,
    /// `beta[n] = β_n` for `0 ≤ n ≤ M`.
    pub beta: Vec<f64>,
    /// Accumulated flow times `k → t_k`.
    pub times: BTreeMap<usize, f64>,
}

impl TodaState {
    pub fn new(eps: f64, gamma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if !(eps > 0.0) {
            return domain("eps must be positive");
        }
        if gamma.len() != beta.len() || beta.is_empty() {
            return domain("need gamma[0..=M] and beta[0..=M] of equal length");
        }
        if gamma[1..].iter().any(|g| !(*g > 0.0)) || beta.iter().any(|b| !b.is_finite()) {
            return domain("need γ_n > 0 and finite β_n");
        }
        let mut gamma = gamma;
        gamma[0] = 0.0;
        Ok(Self { eps, gamma, beta, times: BTreeMap::new() })
    }

    /// `γ_n² = n ε`, `β_n = 0`: recurrence data of `V_0 = ξ²/2`.
    pub fn gaussian(eps: f64, m: usize) -> Result<Self> {
        let gamma = (0..=m).map(|n| (n as f64 * eps).sqrt()).collect();
        Self::new(eps, gamma, vec![0.0; m + 1])
    }

    /// Samples `u_n = log γ_n² = u(εn)`, `v_n = -β_n = v(εn)`.
    pub fn from_profiles(eps: f64, m: usize, u: &dyn Fn(f64) -> f64, v: &dyn Fn(f64) -> f64) -> Result<Self> {
        let gamma = (0..=m).map(|n| (0.5 * u(eps * n as f64)).exp()).collect();
        let beta = (0..=m).map(|n| -v(eps * n as f64)).collect();
        Self::new(eps, gamma, beta)
    }

    pub fn m(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn jacobi_matrix(&self) -> DMatrix<f64> {
        let n = self.beta.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.beta[i]
            } else if i == j + 1 {
                self.gamma[i]
            } else if j == i + 1 {
                self.gamma[j]
            } else {
                0.0
            }
        })
    }

    /// Sorted eigenvalues of `Q`.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.jacobi_matrix()).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// Symmetric band matrix stored by rows: `rows[i][d + p] = A_{i, i+d}`
/// for `|d| ≤ p`.
#[derive(Debug, Clone)]
struct Band {
    p: usize,
    rows: Vec<Vec<f64>>,
}

impl Band {
    fn identity(n: usize) -> Self {
        Self { p: 0, rows: vec![vec![1.0]; n] }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.p || j >= self.rows.len() {
            return 0.0;
        }
        self.rows[i][(d + self.p as isize) as usize]
    }

    /// `A Q` with `Q` tridiagonal; the bandwidth grows by one.
    fn times_q(&self, gamma: &[f64], beta: &[f64]) -> Self {
        let n = self.rows.len();
        let p = self.p + 1;
        let g = |j: usize| if j == 0 || j >= n { 0.0 } else { gamma[j] };
        let mut rows = vec![vec![0.0; 2 * p + 1]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            let lo = i.saturating_sub(p);
            let hi = (i + p).min(n - 1);
            for j in lo..=hi {
                // (AQ)_{ij} = A_{i,j-1} Q_{j-1,j} + A_{ij} Q_{jj} + A_{i,j+1} Q_{j+1,j}
                let mut s = self.get(i, j) * beta[j];
                if j > 0 {
                    s += self.get(i, j - 1) * g(j);
                }
                if j + 1 < n {
                    s += self.get(i, j + 1) * g(j + 1);
                }
                row[j + p - i] = s;
            }
        }
        Self { p, rows }
    }

    fn axpy_identity(mut self, c: f64) -> Self {
        for row in self.rows.iter_mut() {
            row[self.p] += c;
        }
        self
    }

    fn scale(mut self, c: f64) -> Self {
        for row in self.rows.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        self
    }
}

fn q_power(gamma: &[f64], beta: &[f64], k: usize) -> Band {
    let mut a = Band::identity(beta.len());
    for _ in 0..k {
        a = a.times_q(gamma, beta);
    }
    a
}

/// `P(Q)` by Horner's rule on band matrices.
fn poly_of_q(poly: &Poly, gamma: &[f64], beta: &[f64]) -> Band {
    let d = poly.degree();
    let mut a = Band::identity(beta.len()).scale(poly.coeff(d));
    for k in (0..d).rev() {
        a = a.times_q(gamma, beta).axpy_identity(poly.coeff(k));
    }
    a
}

/// Right-hand side of the `k`-th flow, divided by `ε`.
fn hierarchy_rhs(eps: f64, k: usize, gamma: &[f64], beta: &[f64], dg: &mut [f64], db: &mut [f64]) {
    let m = beta.len() - 1;
    let qk = q_power(gamma, beta, k);
    dg[0] = 0.0;
    for n in 1..=m {
        dg[n] = 0.5 * gamma[n] * (qk.get(n - 1, n - 1) - qk.get(n, n)) / eps;
    }
    for n in 0..=m {
        let down = if n >= 1 { gamma[n] * qk.get(n, n - 1) } else { 0.0 };
        let up = if n < m { gamma[n + 1] * qk.get(n + 1, n) } else { 0.0 };
        db[n] = (down - up) / eps;
    }
}

/// Isospectrality tolerance past which a flow reports a step-size error.
pub const SPECTRUM_TOL: f64 = 1e-6;

pub fn flow_t1(state: &TodaState, dt: f64, steps: usize) -> Result<TodaState> {
    flow_hierarchy(state, 1, dt, steps)
}

/// Classical RK4 in `t_k` with fixed step `dt`.
pub fn flow_hierarchy(state: &TodaState, k: usize, dt: f64, steps: usize) -> Result<TodaState> {
    if !(1..=4).contains(&k) {
        return domain(format!("flow index k = {k} outside 1..=4"));
    }
    if !dt.is_finite() {
        return domain("dt must be finite");
    }
    let norm = state.jacobi_matrix().row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    // Rates scale like k ‖Q‖^k / ε; keep RK4 well inside its stability region.
    let bound = state.eps / (k as f64 * norm.max(1e-300).powi(k as i32));
    if steps > 0 && dt.abs() > bound {
        return domain(format!("dt = {dt:.3e} exceeds the stability bound {bound:.3e}"));
    }
    let mut out = state.clone();
    if steps == 0 {
        return Ok(out);
    }
    let before = state.spectrum();
    let n = state.beta.len();
    let (eps, mut g, mut b) = (state.eps, state.gamma.clone(), state.beta.clone());
    let mut kg = vec![vec![0.0; n]; 4];
    let mut kb = vec![vec![0.0; n]; 4];
    let (mut tg, mut tb) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..steps {
        for stage in 0..4 {
            let c = match stage {
                0 => 0.0,
                3 => dt,
                _ => 0.5 * dt,
            };
            for i in 0..n {
                let (pg, pb) = if stage == 0 { (0.0, 0.0) } else { (kg[stage - 1][i], kb[stage - 1][i]) };
                tg[i] = g[i] + c * pg;
                tb[i] = b[i] + c * pb;
            }
            let (dg, db) = (&mut kg[stage], &mut kb[stage]);
            hierarchy_rhs(eps, k, &tg, &tb, dg, db);
        }
        for i in 0..n {
            g[i] += dt / 6.0 * (kg[0][i] + 2.0 * kg[1][i] + 2.0 * kg[2][i] + kg[3][i]);
            b[i] += dt / 6.0 * (kb[0][i] + 2.0 * kb[1][i] + 2.0 * kb[2][i] + kb[3][i]);
        }
        if g.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Stability("Toda flow blew up".into()));
        }
    }
    out.gamma = g;
    out.beta = b;
    *out.times.entry(k).or_insert(0.0) += dt * steps as f64;
    let drift = spectrum_drift(&before, &out.spectrum());
    if drift > SPECTRUM_TOL {
        return Err(Error::Accuracy(format!("spectrum drifted by {drift:.3e}; reduce the step size")));
    }
    Ok(out)
}

pub fn spectrum_drift(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `res1_n = γ_n [V'(Q)]_{n,n-1} - n ε` and `res2_n = [V'(Q)]_{n,n}` for
/// `n < M + 1 - deg V'`, where truncation does not reach `V'(Q)`.
pub fn string_residual(state: &TodaState, v: &Poly) -> (Vec<f64>, Vec<f64>) {
    let dv = v.derivative();
    let a = poly_of_q(&dv, &state.gamma, &state.beta);
    let m = state.m();
    let interior = (m + 1).saturating_sub(dv.degree().max(1));
    let res1 = (1..interior).map(|n| state.gamma[n] * a.get(n, n - 1) - n as f64 * state.eps).collect();
    let res2 = (0..interior).map(|n| a.get(n, n)).collect();
    (res1, res2)
}

/// Max residual of the first-order continuum truncation on interior nodes:
/// `(v_n - v_{n-1})/ε - (v_x - ε v_xx / 2)` and
/// `(e^{u_{n+1}} - e^{u_n})/ε - ((e^u)_x + ε (e^u)_xx / 2)`,
/// with derivatives from fourth-order central differences.
pub fn continuum_residual(state: &TodaState) -> Result<f64> {
    let m = state.m();
    if m < 6 {
        return domain("need at least seven lattice sites");
    }
    let eps = state.eps;
    let v: Vec<f64> = state.beta.iter().map(|b| -b).collect();
    let e: Vec<f64> = state.gamma.iter().map(|g| g * g).collect();
    let d1 = |f: &[f64], n: usize| (f[n - 2] - 8.0 * f[n - 1] + 8.0 * f[n + 1] - f[n + 2]) / (12.0 * eps);
    let d2 = |f: &[f64], n: usize| {
        (-f[n - 2] + 16.0 * f[n - 1] - 30.0 * f[n] + 16.0 * f[n + 1] - f[n + 2]) / (12.0 * eps * eps)
    };
    // γ_0 = 0 is the truncation, not a sample of e^u.
    let mut worst = 0.0f64;
    for n in 3..=m - 2 {
        let r1 = (v[n] - v[n - 1]) / eps - (d1(&v, n) - 0.5 * eps * d2(&v, n));
        let r2 = (e[n + 1] - e[n]) / eps - (d1(&e, n) + 0.5 * eps * d2(&e, n));
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}

/// `w + (ε/2) w_x + (ε²/12) w_xx` on the interior of a uniform grid, the
/// second-order truncation of `ε∂(1 - e^{-ε∂})^{-1} w`.
pub fn canonical_shift(w: &[f64], eps: f64) -> Vec<f64> {
    (1..w.len().saturating_sub(1))
        .map(|n| {
            let wx = (w[n + 1] - w[n - 1]) / (2.0 * eps);
            let wxx = (w[n + 1] - 2.0 * w[n] + w[n - 1]) / (eps * eps);
            w[n] + 0.5 * eps * wx + eps * eps / 12.0 * wxx
        })
        .collect()
}

/// `λ± = ∓(r₊ - r₋)/4`.
pub fn characteristic_speeds(r_plus: f64, r_minus: f64) -> (f64, f64) {
    let d = 0.25 * (r_plus - r_minus);
    (-d, d)
}

fn binom_half(j: usize) -> f64 {
    (1..=j).fold(1.0, |c, i| c * (1.5 - i as f64) / i as f64)
}

fn falling(j: usize, p: usize) -> f64 {
    if p > j {
        0.0
    } else {
        (0..p).fold(1.0, |acc, i| acc * (j - i) as f64)
    }
}

/// `∂^p_{r₊} ∂^q_{r₋} f` for `f(r₊, r₋) = -[ξ^{-1}] V₀'(ξ) √((ξ - r₊)(ξ - r₋))`
/// from the Laurent expansion at infinity. The overall sign is the one
/// that makes `V₀ = ξ²/2`, `t = 0` give `r± = ±2√x`.
pub fn f_partial(v0: &Poly, r_plus: f64, r_minus: f64, p: usize, q: usize) -> f64 {
    let dv = v0.derivative();
    let mut acc = 0.0;
    for m in 0..=dv.degree() {
        let vm = dv.coeff(m);
        if vm == 0.0 {
            continue;
        }
        let k = m + 2;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut s = 0.0;
        for j in 0..=k {
            let fa = falling(j, p);
            let fb = falling(k - j, q);
            if fa == 0.0 || fb == 0.0 {
                continue;
            }
            s += binom_half(j)
                * binom_half(k - j)
                * fa
                * r_plus.powi((j - p) as i32)
                * fb
                * r_minus.powi((k - j - q) as i32);
        }
        acc += vm * sign * s;
    }
    -acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodographPoint {
    pub x: f64,
    pub t: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub residual: f64,
}

fn hodograph_eqs(x: f64, t: f64, v0: &Poly, rp: f64, rm: f64) -> [f64; 2] {
    let (lp, lm) = characteristic_speeds(rp, rm);
    [lp * t + f_partial(v0, rp, rm, 1, 0) - x, lm * t + f_partial(v0, rp, rm, 0, 1) - x]
}

pub fn hodograph_solve(x: f64, t: f64, v0: &Poly) -> Result<HodographPoint> {
    if !(x > 0.0) {
        return domain("hodograph solve needs x > 0");
    }
    let s = 2.0 * x.sqrt();
    hodograph_solve_from(x, t, v0, (s, -s))
}

/// Newton on `x = λ± t + f±(r₊, r₋)` with the exact Jacobian.
pub fn hodograph_solve_from(x: f64, t: f64, v0: &Poly, seed: (f64, f64)) -> Result<HodographPoint> {
    if !x.is_finite() || !t.is_finite() {
        return domain("x and t must be finite");
    }
    let (mut rp, mut rm) = seed;
    let mut res = f64::INFINITY;
    for _ in 0..100 {
        let f = hodograph_eqs(x, t, v0, rp, rm);
        res = f[0].abs().max(f[1].abs());
        if res < 1e-13 * x.abs().max(1.0) {
            break;
        }
        let a = -0.25 * t + f_partial(v0, rp, rm, 2, 0);
        let b = 0.25 * t + f_partial(v0, rp, rm, 1, 1);
        let d = -0.25 * t + f_partial(v0, rp, rm, 0, 2);
        let det = a * d - b * b;
        let scale = a.abs().max(b.abs()).max(d.abs());
        if !(det.abs() > 1e-12 * scale * scale) {
            return Err(Error::CatastropheReached(format!("hodograph Jacobian is singular at r = ({rp:.6}, {rm:.6})")));
        }
        rp -= (d * f[0] - b * f[1]) / det;
        rm -= (a * f[1] - b * f[0]) / det;
        if !(rp > rm) {
            return Err(Error::Convergence { iterations: 0, residual: res, last: vec![rp, rm] });
        }
    }
    if !(res < 1e-10) {
        return Err(Error::Convergence { iterations: 100, residual: res, last: vec![rp, rm] });
    }
    let (lambda_plus, lambda_minus) = characteristic_speeds(rp, rm);
    Ok(HodographPoint { x, t, r_plus: rp, r_minus: rm, lambda_plus, lambda_minus, residual: res })
}

/// Gradient catastrophe for `r₊`: `λ₊,₊ t + f₊,₊ = 0`, `f₊,₊₊ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TodaCriticalPoint {
    pub r_plus: f64,
    pub r_minus: f64,
    pub t: f64,
    pub x: f64,
}

/// `t` and `x` consistent with both hodograph equations at `(r₊, r₋)`.
fn hodograph_tx(v0: &Poly, rp: f64, rm: f64) -> (f64, f64) {
    let fp = f_partial(v0, rp, rm, 1, 0);
    let fm = f_partial(v0, rp, rm, 0, 1);
    let t = 2.0 * (fp - fm) / (rp - rm);
    let (lp, _) = characteristic_speeds(rp, rm);
    (t, lp * t + fp)
}

fn critical_eqs(v0: &Poly, rp: f64, rm: f64) -> [f64; 2] {
    let (t, _) = hodograph_tx(v0, rp, rm);
    [-0.25 * t + f_partial(v0, rp, rm, 2, 0), f_partial(v0, rp, rm, 3, 0)]
}

/// Grid scan of `|F|` over the box, then Newton.
pub fn locate_catastrophe(v0: &Poly, rp_range: (f64, f64), rm_range: (f64, f64)) -> Result<TodaCriticalPoint> {
    let m = 60;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=m {
        for j in 0..=m {
            let rp = rp_range.0 + (rp_range.1 - rp_range.0) * i as f64 / m as f64;
            let rm = rm_range.0 + (rm_range.1 - rm_range.0) * j as f64 / m as f64;
            if rp <= rm {
                continue;
            }
            let f = critical_eqs(v0, rp, rm);
            let r = f[0].hypot(f[1]);
            if r < best.0 {
                best = (r, rp, rm);
            }
        }
    }
    if !best.0.is_finite() {
        return domain("search box has no points with r+ > r-");
    }
    let out =
        newton_solve(|r: &[f64]| Ok(critical_eqs(v0, r[0], r[1]).to_vec()), &[best.1, best.2], &RootConfig::default())?;
    let (rp, rm) = (out.x[0], out.x[1]);
    if !(rp - rm > 1e-6 * (1.0 + rp.abs().max(rm.abs()))) {
        return Err(Error::Genericity(format!("Newton collapsed onto r+ = r- = {rp:.6}")));
    }
    let (t, x) = hodograph_tx(v0, rp, rm);
    Ok(TodaCriticalPoint { r_plus: rp, r_minus: rm, t, x })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatastropheConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn catastrophe_constants(v0: &Poly, cp: &TodaCriticalPoint) -> Result<CatastropheConstants> {
    let (rp, rm, t) = (cp.r_plus, cp.r_minus, cp.t);
    if !(rp > rm) {
        return domain("need r+ > r-");
    }
    let (lp, lm) = characteristic_speeds(rp, rm);
    // λ± are linear in r±: λ₊,₊ = λ₋,₋ = -1/4, higher derivatives vanish.
    let c1 = f_partial(v0, rp, rm, 0, 2) - 0.25 * t;
    let c3 = f_partial(v0, rp, rm, 4, 0) / 6.0;
    let scale = 1.0 + f_partial(v0, rp, rm, 2, 0).abs();
    if c3.abs() <= 1e-12 * scale || c1.abs() <= 1e-12 * scale {
        return Err(Error::Genericity(format!("c1 = {c1:.3e}, c3 = {c3:.3e}")));
    }
    Ok(CatastropheConstants { c1, c2: -0.25 / (lp - lm), c3, c4: (rp - rm) / (192.0 * (lm - lp)) })
}
