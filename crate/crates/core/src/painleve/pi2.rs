use crate::error::{domain, Error, Result};
use crate::numerics::bvp::{
    graded_breaks, solve_collocation, CollocationOptions, CollocationSolution, Dirichlet, FirstOrderSystem, Side,
};

use super::Evaluated;

/// `y = (U, U', U'', U''')` for fixed `T`.
#[derive(Debug, Clone, Copy)]
pub struct Pi2System {
    pub t: f64,
}

/// `U''''` from the equation.
pub fn pi2_fourth(x: f64, t: f64, y: &[f64]) -> f64 {
    let (u, u1, u2) = (y[0], y[1], y[2]);
    240.0 * (t * u - x - u * u * u / 6.0 - (u1 * u1 + 2.0 * u * u2) / 24.0)
}

impl FirstOrderSystem for Pi2System {
    fn dim(&self) -> usize {
        4
    }
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        out[0] = y[1];
        out[1] = y[2];
        out[2] = y[3];
        out[3] = pi2_fourth(x, self.t, y);
    }
    fn jacobian(&self, _x: f64, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[1] = 1.0;
        out[6] = 1.0;
        out[11] = 1.0;
        out[12] = 240.0 * (self.t - 0.5 * y[0] * y[0] - y[2] / 12.0);
        out[13] = -20.0 * y[1];
        out[14] = -20.0 * y[0];
    }
}

/// Two-term large-`|X|` behaviour `U ≈ ∓(6|X|)^{1/3} ∓ (1/3) 6^{2/3} T |X|^{-1/3}`
/// and its derivative.
pub fn pi2_asymptote(x: f64, t: f64) -> (f64, f64) {
    let ax = x.abs();
    let s = -x.signum();
    let c = 6f64.powf(2.0 / 3.0) / 3.0;
    let u = s * ((6.0 * ax).cbrt() + c * t / ax.cbrt());
    let du = -(6f64.cbrt() / 3.0 * ax.powf(-2.0 / 3.0) - c * t / 3.0 * ax.powf(-4.0 / 3.0));
    (u, du)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pi2Config {
    pub degree: usize,
    /// Largest step of the continuation in `T` from `T = 0`.
    pub continuation_step: f64,
    pub residual_tol: f64,
    pub newton: CollocationOptions,
}

impl Default for Pi2Config {
    fn default() -> Self {
        Self { degree: 12, continuation_step: 0.25, residual_tol: 1e-8, newton: CollocationOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PI2Solution {
    pub t: f64,
    pub l: f64,
    pub x_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    /// `[U, U', U'', U''', U'''']` at every grid point.
    pub derivatives: Vec<[f64; 5]>,
    /// Max of the equation residual and the first-order defects.
    pub residual_norm: f64,
    pub colloc: CollocationSolution,
}

fn mesh(l: f64, n_points: usize, degree: usize) -> Vec<f64> {
    let elements = (n_points - 1).div_ceil(degree).max(8);
    // Linearising about the asymptote gives boundary layers decaying like
    // exp(-rate·dist) with rate ≈ (120 U²)^{1/4}.
    let u_end = (6.0 * l).cbrt();
    let rate = (120.0 * u_end * u_end).powf(0.25);
    let h_min = 0.3 / rate;
    // Half the elements on the core |X| ≤ 8 where the solution turns.
    let core = 8.0f64.min(0.5 * l);
    let n_core = elements / 2;
    let n_out = ((elements - n_core) / 2).max(2);
    let mut breaks = graded_breaks(-l, -core, n_out, h_min, 1.12);
    breaks.pop();
    breaks.extend((0..n_core).map(|i| -core + 2.0 * core * i as f64 / n_core as f64));
    breaks.extend(graded_breaks(core, l, n_out, h_min, 1.12));
    breaks
}

fn initial_guess(x: f64, y: &mut [f64]) {
    let g = |x: f64| -6.0 * x / (36.0 * x * x + 1.0).cbrt();
    let h = 1e-3;
    y[0] = g(x);
    y[1] = (g(x + h) - g(x - h)) / (2.0 * h);
    y[2] = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
    y[3] = (g(x + 2.0 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2.0 * h)) / (2.0 * h * h * h);
}

fn bcs(l: f64, t: f64) -> Vec<Dirichlet> {
    let (ul, dl) = pi2_asymptote(-l, t);
    let (ur, dr) = pi2_asymptote(l, t);
    vec![
        Dirichlet { side: Side::Left, component: 0, value: ul },
        Dirichlet { side: Side::Left, component: 1, value: dl },
        Dirichlet { side: Side::Right, component: 0, value: ur },
        Dirichlet { side: Side::Right, component: 1, value: dr },
    ]
}

/// Max over check points of the equation residual and of the defects
/// `|y_k' - y_{k+1}|`.
fn residual(sol: &CollocationSolution, t: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut y = [0.0; 4];
    let mut dy = [0.0; 4];
    let per = 2 * sol.degree;
    for e in 0..sol.breaks.len() - 1 {
        let (a, b) = (sol.breaks[e], sol.breaks[e + 1]);
        for i in 0..=per {
            let x = a + (b - a) * i as f64 / per as f64;
            sol.eval_all(x, &mut y, &mut dy);
            let eq = x - t * y[0] + y[0].powi(3) / 6.0 + (y[1] * y[1] + 2.0 * y[0] * y[2]) / 24.0 + dy[3] / 240.0;
            worst = worst.max(eq.abs());
            for k in 0..3 {
                worst = worst.max((dy[k] - y[k + 1]).abs());
            }
        }
    }
    worst
}

fn collect(colloc: CollocationSolution, t: f64, l: f64) -> PI2Solution {
    let n = colloc.n_nodes();
    let mut x_grid = Vec::with_capacity(n);
    let mut u_values = Vec::with_capacity(n);
    let mut derivatives = Vec::with_capacity(n);
    for g in 0..n {
        let x = colloc.node_x(g);
        let y = &colloc.values[4 * g..4 * g + 4];
        x_grid.push(x);
        u_values.push(y[0]);
        derivatives.push([y[0], y[1], y[2], y[3], pi2_fourth(x, t, y)]);
    }
    let residual_norm = residual(&colloc, t);
    PI2Solution { t, l, x_grid, u_values, derivatives, residual_norm, colloc }
}

pub fn solve_pi2(t: f64, l: f64, n_points: usize) -> Result<PI2Solution> {
    solve_pi2_with(t, l, n_points, &Pi2Config::default())
}

/// Collocation solve on `[-L, L]` with the two-term asymptote imposed on
/// `U` and `U'` at both ends, continued in `T` from `T = 0`.
pub fn solve_pi2_with(t: f64, l: f64, n_points: usize, cfg: &Pi2Config) -> Result<PI2Solution> {
    if !t.is_finite() || !l.is_finite() {
        return domain("T and L must be finite");
    }
    if n_points < 200 {
        return domain(format!("n_points must be at least 200, got {n_points}"));
    }
    let ratio = 6f64.cbrt() / 3.0 * t.abs() / l.powf(2.0 / 3.0);
    if !(l > 1.0) || ratio >= 0.05 {
        return domain(format!(
            "L = {l} too small for T = {t}: asymptotic correction is {ratio:.3} of the leading term"
        ));
    }
    let breaks = mesh(l, n_points, cfg.degree);
    let sys0 = Pi2System { t: 0.0 };
    let mut cur = solve_collocation(&sys0, &breaks, cfg.degree, &bcs(l, 0.0), &initial_guess, &cfg.newton)
        .map_err(|e| continuation_hint(e, 0.0))?;
    let mut t_now = 0.0;
    let mut step = cfg.continuation_step.min(t.abs().max(f64::MIN_POSITIVE)) * t.signum();
    let mut halvings = 0;
    while t_now != t {
        let t_next = if (t - t_now).abs() <= step.abs() { t } else { t_now + step };
        let prev = cur.clone();
        let init = move |x: f64, y: &mut [f64]| {
            let mut dy = [0.0; 4];
            prev.eval_all(x, y, &mut dy);
        };
        match solve_collocation(&Pi2System { t: t_next }, &breaks, cfg.degree, &bcs(l, t_next), &init, &cfg.newton) {
            Ok(s) => {
                cur = s;
                t_now = t_next;
            }
            Err(e) => {
                halvings += 1;
                if halvings > 6 {
                    return Err(continuation_hint(e, t_next));
                }
                step *= 0.5;
            }
        }
    }
    let sol = collect(cur, t, l);
    if !(sol.residual_norm <= cfg.residual_tol) {
        return Err(Error::Accuracy(format!(
            "P_I2 residual {:.3e} exceeds {:.1e}; increase n_points",
            sol.residual_norm, cfg.residual_tol
        )));
    }
    Ok(sol)
}

fn continuation_hint(e: Error, t: f64) -> Error {
    match e {
        Error::Convergence { iterations, residual, .. } => Error::Convergence { iterations, residual, last: vec![t] },
        other => other,
    }
}

/// `U(X)` from the collocation polynomial, or the asymptote outside `[-L, L]`.
pub fn eval_pi2(sol: &PI2Solution, x: f64) -> Evaluated {
    if x.abs() > sol.l {
        return Evaluated { value: pi2_asymptote(x, sol.t).0, extrapolated: true };
    }
    Evaluated { value: sol.colloc.eval(x, 0), extrapolated: false }
}

/// Least-squares fit `|U - U_asym| ≈ C |X|^p` over `a ≤ |X| ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub samples: usize,
}

pub fn tail_fit(sol: &PI2Solution, a: f64, b: f64) -> Result<TailFit> {
    if !(0.0 < a && a < b && b <= sol.l) {
        return domain(format!("tail window [{a}, {b}] must lie inside (0, L]"));
    }
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
    let m = 64;
    for side in [-1.0, 1.0] {
        for i in 0..=m {
            let ax = a * (b / a).powf(i as f64 / m as f64);
            let x = side * ax;
            let diff = (sol.colloc.eval(x, 0) - pi2_asymptote(x, sol.t).0).abs();
            if diff > 0.0 {
                let (lx, ly) = (ax.ln(), diff.ln());
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                n += 1;
            }
        }
    }
    if n < 3 {
        return domain("tail fit has too few nonzero samples");
    }
    let nf = n as f64;
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let icpt = (sy - slope * sx) / nf;
    Ok(TailFit { exponent: slope, constant: icpt.exp(), samples: n })
}
