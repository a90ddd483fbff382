//! Spatially inhomogeneous optional public goods game.
//!
//! A simulation and verification suite for the reaction-diffusion
//! system
//!
//! ```text
//! f_t - d_f lap f = -f(1-f) G(z)
//! z_t - d_z lap z = (sigma - f(r-1)) z(1-z)(1-z^{N-1})
//! ```
//!
//! on a 1-D interval with zero-flux boundaries, together with its
//! replicator ODE reduction and the fast-diffusion shadow system.
//! The crate provides:
//!
//! - [`model`]: game parameters, the incentive polynomial G(z),
//!   payoffs, and the interior fixed point, with exact rational
//!   identity checks;
//! - [`hamiltonian`]: the conserved H = H1 + H2, its derivatives, and
//!   grid/exact certification that the Hessian is positive;
//! - [`ode`]: adaptive Runge-Kutta orbits with drift monitoring and
//!   period measurement;
//! - [`pde`]: a Strang-split IMEX solver with Lyapunov diagnostics;
//! - [`shadow`]: the d_z -> infinity limit (scalar Z driven by the
//!   spatial mean of F);
//! - [`harness`]: config-driven experiments reproducing the
//!   convergence and periodicity behaviour at desk scale, with CSV
//!   reports.
//!
//! See the crate examples for one runnable program per capability.

pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod model;
pub mod ode;
pub mod pde;
pub mod rational;
pub mod shadow;

pub use error::{PggError, Result};
