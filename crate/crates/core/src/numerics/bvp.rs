//! Gauss collocation for two-point boundary value problems `y' = f(x, y)`.
//!
//! The solution is a continuous piecewise polynomial of degree `p` per
//! element, stored by its values at Chebyshev–Lobatto nodes. The ODE is
//! enforced at the `p` Gauss–Legendre points of every element, which
//! gives superconvergence of order `2p` at the element breaks. The
//! Newton systems are banded and solved with [`BandMatrix`].

use crate::error::{domain, Error, Result};
use crate::numerics::banded::BandMatrix;
use crate::numerics::quadrature::cached_gauss_legendre;

/// First-order system `y' = f(x, y)` with its Jacobian `∂f/∂y`.
pub trait FirstOrderSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]);
    /// Row-major `dim × dim` Jacobian.
    fn jacobian(&self, x: f64, y: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Side {
    Left,
    Right,
}

/// Dirichlet condition `y_component(side) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirichlet {
    pub side: Side,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollocationOptions {
    pub max_newton: usize,
    /// Newton stops once the scaled update falls below this.
    pub step_tol: f64,
}

impl Default for CollocationOptions {
    fn default() -> Self {
        Self { max_newton: 60, step_tol: 1e-13 }
    }
}

/// Lagrange basis on Chebyshev–Lobatto points of `[-1, 1]`.
#[derive(Debug, Clone)]
struct LobattoBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    /// Differentiation matrix, row-major.
    diff: Vec<f64>,
}

impl LobattoBasis {
    fn new(p: usize) -> Self {
        let nodes: Vec<f64> = (0..=p).map(|j| -(std::f64::consts::PI * j as f64 / p as f64).cos()).collect();
        let bary: Vec<f64> = (0..=p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == p {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let n = p + 1;
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if j != i {
                    let d = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    diff[i * n + j] = d;
                    diag -= d;
                }
            }
            diff[i * n + i] = diag;
        }
        Self { nodes, bary, diff }
    }

    /// Basis values and derivatives at `xi`. Derivatives interpolate the
    /// nodal derivative rows, which is exact and avoids cancellation
    /// close to a node.
    fn eval(&self, xi: f64, val: &mut [f64], der: &mut [f64]) {
        let n = self.nodes.len();
        if let Some(hit) = self.nodes.iter().position(|&x| x == xi) {
            for j in 0..n {
                val[j] = if j == hit { 1.0 } else { 0.0 };
            }
        } else {
            let mut denom = 0.0;
            for j in 0..n {
                val[j] = self.bary[j] / (xi - self.nodes[j]);
                denom += val[j];
            }
            for v in val.iter_mut().take(n) {
                *v /= denom;
            }
        }
        for (k, d) in der.iter_mut().enumerate().take(n) {
            *d = (0..n).map(|j| val[j] * self.diff[j * n + k]).sum();
        }
    }
}

/// Continuous piecewise polynomial solution of a collocation solve.
#[derive(Debug, Clone)]
pub struct CollocationSolution {
    pub breaks: Vec<f64>,
    pub degree: usize,
    pub dim: usize,
    /// Node-major values: node `g` component `k` at `g * dim + k`.
    pub values: Vec<f64>,
    pub newton_iterations: usize,
    basis: LobattoBasis,
}

impl CollocationSolution {
    pub fn n_nodes(&self) -> usize {
        (self.breaks.len() - 1) * self.degree + 1
    }

    pub fn node_x(&self, g: usize) -> f64 {
        let p = self.degree;
        let e = (g / p).min(self.breaks.len() - 2);
        let j = g - e * p;
        let (a, b) = (self.breaks[e], self.breaks[e + 1]);
        0.5 * (a + b) + 0.5 * (b - a) * self.basis.nodes[j]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    fn element_of(&self, x: f64) -> usize {
        let k = self.breaks.len() - 1;
        match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(k - 1),
            Err(i) => i.saturating_sub(1).min(k - 1),
        }
    }

    /// Values and `x`-derivatives of every component at `x`.
    pub fn eval_all(&self, x: f64, y: &mut [f64], dy: &mut [f64]) {
        let p = self.degree;
        let e = self.element_of(x);
        let (a, b) = (self.breaks[e], self.breaks[e + 1]);
        let xi = (2.0 * x - a - b) / (b - a);
        let mut val = vec![0.0; p + 1];
        let mut der = vec![0.0; p + 1];
        self.basis.eval(xi, &mut val, &mut der);
        let m = self.dim;
        for k in 0..m {
            let (mut s, mut d) = (0.0, 0.0);
            for j in 0..=p {
                let v = self.values[(e * p + j) * m + k];
                s += val[j] * v;
                d += der[j] * v;
            }
            y[k] = s;
            dy[k] = d * 2.0 / (b - a);
        }
    }

    pub fn eval(&self, x: f64, component: usize) -> f64 {
        let mut y = vec![0.0; self.dim];
        let mut dy = vec![0.0; self.dim];
        self.eval_all(x, &mut y, &mut dy);
        y[component]
    }

    /// Max over check points of `|y'(x) - f(x, y(x))|` per component.
    /// Check points avoid the collocation points.
    pub fn defect<S: FirstOrderSystem>(&self, sys: &S, per_element: usize) -> Vec<f64> {
        let m = self.dim;
        let mut worst = vec![0.0f64; m];
        let mut y = vec![0.0; m];
        let mut dy = vec![0.0; m];
        let mut f = vec![0.0; m];
        for e in 0..self.breaks.len() - 1 {
            let (a, b) = (self.breaks[e], self.breaks[e + 1]);
            for i in 0..per_element {
                let x = a + (b - a) * (i as f64 + 0.5) / per_element as f64;
                self.eval_all(x, &mut y, &mut dy);
                sys.rhs(x, &y, &mut f);
                for k in 0..m {
                    worst[k] = worst[k].max((dy[k] - f[k]).abs());
                }
            }
        }
        worst
    }
}

/// Element breaks on `[a, b]`: sizes grow geometrically by `ratio` from
/// `h_min` at both ends up to the uniform interior size.
pub fn graded_breaks(a: f64, b: f64, elements: usize, h_min: f64, ratio: f64) -> Vec<f64> {
    let len = b - a;
    let uniform = len / elements as f64;
    if h_min >= uniform || ratio <= 1.0 {
        return (0..=elements).map(|i| a + uniform * i as f64).collect();
    }
    // Ramp sizes h_min·ratio^i until they reach the interior size h.
    // Solve for h so that the total length matches, by fixed-point iteration.
    let mut h = uniform;
    for _ in 0..200 {
        let mut ramp = Vec::new();
        let mut s = h_min;
        while s < h && ramp.len() < elements / 2 {
            ramp.push(s);
            s *= ratio;
        }
        let ramp_len: f64 = ramp.iter().sum();
        let interior = elements as isize - 2 * ramp.len() as isize;
        if interior <= 0 {
            return (0..=elements).map(|i| a + uniform * i as f64).collect();
        }
        let h_new = (len - 2.0 * ramp_len) / interior as f64;
        if (h_new - h).abs() < 1e-14 * len {
            let mut sizes = ramp.clone();
            sizes.extend(std::iter::repeat(h_new).take(interior as usize));
            sizes.extend(ramp.iter().rev());
            let mut breaks = Vec::with_capacity(elements + 1);
            let mut x = a;
            breaks.push(x);
            for s in &sizes {
                x += s;
                breaks.push(x);
            }
            *breaks.last_mut().unwrap() = b;
            return breaks;
        }
        h = h_new;
    }
    (0..=elements).map(|i| a + uniform * i as f64).collect()
}

/// Solve the BVP by Newton's method on the collocation equations.
///
/// `initial(x, y)` fills the initial iterate at `x`.
pub fn solve_collocation<S: FirstOrderSystem>(
    sys: &S,
    breaks: &[f64],
    degree: usize,
    bcs: &[Dirichlet],
    initial: &dyn Fn(f64, &mut [f64]),
    opts: &CollocationOptions,
) -> Result<CollocationSolution> {
    let m = sys.dim();
    let p = degree;
    if p < 2 || breaks.len() < 2 {
        return domain("collocation needs degree >= 2 and at least one element");
    }
    if bcs.len() != m {
        return domain(format!("{} boundary conditions for a system of dimension {m}", bcs.len()));
    }
    if breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("element breaks must increase");
    }
    let left: Vec<&Dirichlet> = bcs.iter().filter(|c| c.side == Side::Left).collect();
    let right: Vec<&Dirichlet> = bcs.iter().filter(|c| c.side == Side::Right).collect();
    let (ml, mr) = (left.len(), right.len());
    let k_el = breaks.len() - 1;
    let n_nodes = k_el * p + 1;
    let n = n_nodes * m;

    let basis = LobattoBasis::new(p);
    let gauss = cached_gauss_legendre(p)?;
    let mut gval = vec![vec![0.0; p + 1]; p];
    let mut gder = vec![vec![0.0; p + 1]; p];
    for c in 0..p {
        basis.eval(gauss.nodes[c], &mut gval[c], &mut gder[c]);
    }

    let mut sol = CollocationSolution {
        breaks: breaks.to_vec(),
        degree: p,
        dim: m,
        values: vec![0.0; n],
        newton_iterations: 0,
        basis: basis.clone(),
    };
    let mut ybuf = vec![0.0; m];
    for g in 0..n_nodes {
        initial(sol.node_x(g), &mut ybuf);
        sol.values[g * m..(g + 1) * m].copy_from_slice(&ybuf);
    }

    let kl = (ml + p * m).saturating_sub(1).max(m);
    let ku = (p * m + m).saturating_sub(1 + ml).max(m);

    let residual = |vals: &[f64], jac: Option<&mut BandMatrix>| -> Vec<f64> {
        let mut r = vec![0.0; n];
        let mut jac = jac;
        for (i, c) in left.iter().enumerate() {
            r[i] = vals[c.component] - c.value;
            if let Some(j) = jac.as_deref_mut() {
                j.set(i, c.component, 1.0);
            }
        }
        for (i, c) in right.iter().enumerate() {
            let row = n - mr + i;
            let col = (n_nodes - 1) * m + c.component;
            r[row] = vals[col] - c.value;
            if let Some(j) = jac.as_deref_mut() {
                j.set(row, col, 1.0);
            }
        }
        let mut yc = vec![0.0; m];
        let mut f = vec![0.0; m];
        let mut fj = vec![0.0; m * m];
        for e in 0..k_el {
            let (a, b) = (breaks[e], breaks[e + 1]);
            let half = 0.5 * (b - a);
            for c in 0..p {
                let x = 0.5 * (a + b) + half * gauss.nodes[c];
                let mut dyc = vec![0.0; m];
                yc.iter_mut().for_each(|v| *v = 0.0);
                for j in 0..=p {
                    let g = e * p + j;
                    for k in 0..m {
                        yc[k] += gval[c][j] * vals[g * m + k];
                        dyc[k] += gder[c][j] * vals[g * m + k];
                    }
                }
                sys.rhs(x, &yc, &mut f);
                let row0 = ml + (e * p + c) * m;
                for i in 0..m {
                    r[row0 + i] = dyc[i] - half * f[i];
                }
                if let Some(jm) = jac.as_deref_mut() {
                    sys.jacobian(x, &yc, &mut fj);
                    for j in 0..=p {
                        let g = e * p + j;
                        for i in 0..m {
                            jm.add(row0 + i, g * m + i, gder[c][j]);
                            for k in 0..m {
                                let v = fj[i * m + k];
                                if v != 0.0 {
                                    jm.add(row0 + i, g * m + k, -half * v * gval[c][j]);
                                }
                            }
                        }
                    }
                }
            }
        }
        r
    };

    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut r = residual(&sol.values, None);
    let mut rnorm = norm(&r);
    for it in 1..=opts.max_newton {
        let mut jac = BandMatrix::zeros(n, kl, ku);
        let _ = residual(&sol.values, Some(&mut jac));
        let lu = jac.factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut delta);
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian("collocation Newton step not finite".into()));
        }
        let scale0 = 1.0 + norm(&sol.values);
        if rnorm < 1e-11 * scale0 && norm(&delta) < 1e-10 * scale0 {
            // At the rounding floor: take the last full step and stop.
            for i in 0..n {
                sol.values[i] += delta[i];
            }
            sol.newton_iterations = it;
            return Ok(sol);
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        let before = rnorm;
        let mut trial = sol.values.clone();
        for _ in 0..25 {
            for i in 0..n {
                trial[i] = sol.values[i] + lambda * delta[i];
            }
            let rt = residual(&trial, None);
            let nt = norm(&rt);
            if nt.is_finite() && (nt < rnorm || nt < 1e-13) {
                sol.values.copy_from_slice(&trial);
                r = rt;
                rnorm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        sol.newton_iterations = it;
        if !accepted {
            return Err(Error::Convergence { iterations: it, residual: rnorm, last: Vec::new() });
        }
        let scale = 1.0 + norm(&sol.values);
        if lambda == 1.0 && norm(&delta) <= opts.step_tol * scale {
            return Ok(sol);
        }
        if rnorm < 1e-15 * scale {
            return Ok(sol);
        }
        // Rounding floor: full steps no longer reduce a tiny residual.
        if lambda == 1.0 && rnorm > 0.5 * before && rnorm < 1e-10 * scale {
            return Ok(sol);
        }
    }
    Err(Error::Convergence { iterations: opts.max_newton, residual: rnorm, last: Vec::new() })
}
