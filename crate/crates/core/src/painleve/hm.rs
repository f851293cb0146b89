use crate::error::{domain, Error, Result};
use crate::numerics::bvp::{
    solve_collocation, CollocationOptions, CollocationSolution, Dirichlet, FirstOrderSystem, Side,
};
use crate::numerics::special::airy;

use super::Evaluated;

/// `q'' = s q + 2 q³` as `(q, q')`.
struct Painleve2;

impl FirstOrderSystem for Painleve2 {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, s: f64, y: &[f64], out: &mut [f64]) {
        out[0] = y[1];
        out[1] = s * y[0] + 2.0 * y[0].powi(3);
    }
    fn jacobian(&self, s: f64, y: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 1.0;
        out[2] = s + 6.0 * y[0] * y[0];
        out[3] = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmConfig {
    pub degree: usize,
    pub newton: CollocationOptions,
}

impl Default for HmConfig {
    fn default() -> Self {
        Self { degree: 10, newton: CollocationOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct HMGrid {
    pub s_max: f64,
    pub s_grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub qp_values: Vec<f64>,
    pub residual_norm: f64,
    pub colloc: CollocationSolution,
}

/// `√(-s/2)` for `s < 0`, `Ai(s)` otherwise.
pub fn hm_asymptote(s: f64) -> f64 {
    if s < 0.0 {
        (-s / 2.0).sqrt()
    } else {
        airy(s)
    }
}

fn initial_guess(s: f64, y: &mut [f64]) {
    // Smooth positive blend of the two asymptotes.
    let g = |s: f64| {
        let w = 0.5 * (1.0 + (2.0 * s).tanh());
        w * airy(s.max(-2.0)) + (1.0 - w) * (0.25 * ((s * s + 1.0).sqrt() - s)).sqrt()
    };
    let h = 1e-4;
    y[0] = g(s);
    y[1] = (g(s + h) - g(s - h)) / (2.0 * h);
}

fn residual(sol: &CollocationSolution) -> f64 {
    let mut worst = 0.0f64;
    let (mut y, mut dy) = ([0.0; 2], [0.0; 2]);
    let per = 2 * sol.degree;
    for e in 0..sol.breaks.len() - 1 {
        let (a, b) = (sol.breaks[e], sol.breaks[e + 1]);
        for i in 0..=per {
            let s = a + (b - a) * i as f64 / per as f64;
            sol.eval_all(s, &mut y, &mut dy);
            let eq = s * y[0] + 2.0 * y[0].powi(3) - dy[1];
            worst = worst.max(eq.abs()).max((dy[0] - y[1]).abs());
        }
    }
    worst
}

pub fn solve_hastings_mcleod(s_max: f64, n_points: usize) -> Result<HMGrid> {
    solve_hastings_mcleod_with(s_max, n_points, &HmConfig::default())
}

/// Collocation on `[-S, S]` with `q(-S) = √(S/2)` and `q(S) = Ai(S)`.
pub fn solve_hastings_mcleod_with(s_max: f64, n_points: usize, cfg: &HmConfig) -> Result<HMGrid> {
    if !(s_max >= 8.0) || !s_max.is_finite() {
        return domain(format!("S must be at least 8, got {s_max}"));
    }
    if n_points < 400 {
        return domain(format!("n_points must be at least 400, got {n_points}"));
    }
    let p = cfg.degree;
    let elements = (n_points - 1).div_ceil(p);
    let breaks: Vec<f64> = (0..=elements).map(|i| -s_max + 2.0 * s_max * i as f64 / elements as f64).collect();
    let bcs = [
        Dirichlet { side: Side::Left, component: 0, value: (s_max / 2.0).sqrt() },
        Dirichlet { side: Side::Right, component: 0, value: airy(s_max) },
    ];
    let colloc = solve_collocation(&Painleve2, &breaks, p, &bcs, &initial_guess, &cfg.newton)?;
    let n = colloc.n_nodes();
    let s_grid: Vec<f64> = (0..n).map(|g| colloc.node_x(g)).collect();
    let q_values: Vec<f64> = (0..n).map(|g| colloc.values[2 * g]).collect();
    let qp_values: Vec<f64> = (0..n).map(|g| colloc.values[2 * g + 1]).collect();
    let q_min = q_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(q_min > 0.0) {
        return Err(Error::Branch(format!("Painlevé II iterate left the positive branch (min q = {q_min:.3e})")));
    }
    let residual_norm = residual(&colloc);
    Ok(HMGrid { s_max, s_grid, q_values, qp_values, residual_norm, colloc })
}

/// `q(s)` from the collocation polynomial, or the asymptote outside `[-S, S]`.
pub fn eval_hm(grid: &HMGrid, s: f64) -> Evaluated {
    if s.abs() > grid.s_max {
        return Evaluated { value: hm_asymptote(s), extrapolated: true };
    }
    Evaluated { value: grid.colloc.eval(s, 0), extrapolated: false }
}
