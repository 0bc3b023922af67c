//! Numerical substrate: adaptive ODE integration, special functions,
//! a small power-law expression language, and finite differences.

pub mod drift;
pub mod expr;
pub mod fd;
pub mod linalg;
pub mod ode;
pub mod special;

pub use expr::{diff_expr, parse_expr, Expr, ExprError, Rational};
pub use fd::{fd_gradient, fd_second};
pub use ode::{integrate_ode, OdeError, OdeProblem, Trajectory};
pub use special::{binomial, erf_fn, hyp2f1, ln_gamma, pochhammer, HypError};
