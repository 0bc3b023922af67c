//! Numerical toolkit for the anharmonic oscillator `y'' + delta*(n+1)*y^n = 0`,
//! the superintegrable two-dimensional metric built from it, and the related
//! classification machinery.
//!
//! The crate is organized around five subsystems:
//!
//! | Module            | Contents                                                          |
//! |-------------------|-------------------------------------------------------------------|
//! | [`numkit`]        | adaptive RK5(4) integration, 2F1 / erf, expression parser, FD     |
//! | [`oscillator`]    | first integrals I1, I2, the polynomial family, explicit solutions |
//! | [`geodesic`]      | metric, Hamiltonian flow, integrals L/R/T/T_k, curvature          |
//! | [`metrisability`] | Christoffel/projection, Liouville system, cubic-oscillator cases  |
//! | [`lienard`]       | point-equivalent Liénard families, pulled-back integrals J1/J2    |
//!
//! Everything is `f64`-based and allocation-light; the crate is `no_std`
//! compatible (with `alloc`) when built with `--no-default-features --features libm`.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("superosc-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod fp;
pub mod numkit;
pub mod oscillator;
pub mod geodesic;
pub mod metrisability;
pub mod lienard;

pub use geodesic::{CoState, GeoError, MetricSpec};
pub use lienard::{LienardError, LienardSpec, LienardState, PointMap};
pub use metrisability::{CubicOscSpec, MetricTensorField, MetrisError, OscCase, PsiTriple};
pub use numkit::ode::{OdeError, OdeProblem, Trajectory};
pub use oscillator::{OscError, OscParams, PhaseState};
