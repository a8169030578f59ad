//! Anthracnose within-host and spatial models with optimal-control solvers.
//!
//! * [`host`]: the within-host ODE system, its integrator and region checks.
//! * [`ode_control`]: cost, adjoint, cubic feedback law and shooting.
//! * [`pde`]: finite-volume discretization of the diffusion model, implicit
//!   stepping, equilibria, bound checks and spectral estimates.
//! * [`pde_control`]: linearization, matrix Riccati feedback, adjoint PDE,
//!   pointwise Hamiltonian feedback and forward-backward sweep.
//! * [`severity`]: weather-driven severity regressions usable as forcings.
//! * [`io`]: CSV formats for fields, paths, diagnostics and weather series.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod host;
pub mod integrate;
pub mod ode_control;
pub mod pde;
pub mod pde_control;
pub mod severity;
pub mod io;

pub use error::{Error, Result};
