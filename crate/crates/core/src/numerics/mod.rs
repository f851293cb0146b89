//! Special functions and generic solvers shared by the domain modules.

pub mod banded;
pub mod bigfloat;
pub mod bvp;
pub mod interp;
pub mod ode;
pub mod poly;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use quadrature::{gauss_jacobi, gauss_legendre, QuadratureRule, RuleKind};
pub use roots::{newton_solve, NewtonOutcome, RootConfig};
pub use special::{airy, airy_pair, complete_elliptic, theta3, theta3_full};
