//! Critical asymptotics for small-dispersion KdV and for recurrence
//! coefficients of unitary-ensemble orthogonal polynomials, together with
//! the direct numerical oracles used to check them.

pub mod error;
pub mod hopf;
pub mod kdv_asym;
pub mod kdv_direct;
pub mod numerics;
pub mod orthopoly;
pub mod painleve;
pub mod rmt_eq;
pub mod soliton;
pub mod toda;

pub use error::{Error, Result};
