//! Boundary value solvers for the fourth-order Painlevé I equation
//! `X = T U - (U³/6 + (U'² + 2 U U'')/24 + U''''/240)` and for the
//! Hastings–McLeod solution of `q'' = s q + 2 q³`.

mod hm;
mod pi2;
pub mod shooting;

pub use hm::{eval_hm, hm_asymptote, solve_hastings_mcleod, HMGrid, HmConfig};
pub use pi2::{
    eval_pi2, pi2_asymptote, pi2_fourth, solve_pi2, solve_pi2_with, tail_fit, PI2Solution, Pi2Config, Pi2System,
    TailFit,
};

/// Interpolated value, flagged when it came from an asymptote outside
/// the solved domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub extrapolated: bool,
}
