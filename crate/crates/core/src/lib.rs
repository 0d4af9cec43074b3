//! Desk-scale solver for the nonhomogeneous incompressible Bénard system
//! with density-dependent viscosity on a rectangular box, plus the
//! diagnostic machinery that turns its a priori energy estimates into
//! per-run ledger columns and pass/fail verdicts.
//!
//! The system carried by [`stepper::FluidState`] is
//!
//! ```text
//! rho_t + u . grad rho                                = 0
//! rho u_t + rho u . grad u - div(2 mu(rho) D(u)) + grad P = rho theta e3
//! rho theta_t + rho u . grad theta - kappa Lap theta  = rho u . e3
//! div u = 0,      u = 0 and theta = 0 on the boundary
//! ```
//!
//! with `D(u) = (grad u + grad u^T)/2` and `0 < mu_min <= mu(rho) <= mu_max`.
//! Scalars (rho, theta, P) live at cell centers, velocity components on
//! faces (MAC layout). Every norm and functional the ledger reports is
//! computed by the quadratures in [`norms`], so values are reproducible
//! bit-for-bit across runs.

pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod inequalities;
pub mod initial;
pub mod ledger;
pub mod linsolve;
pub mod norms;
pub mod ops;
pub mod output;
pub mod poisson;
pub mod scenario;
pub mod stepper;
pub mod stokes;
pub mod transport;
pub mod viscosity;

pub use error::{Result, SimError};
pub use field::{Boundary, ScalarField, VectorField};
pub use grid::Grid;
