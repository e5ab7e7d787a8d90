//! Conservative semi-Lagrangian advection in Hermite flux form.
//!
//! Cell averages are advanced by finite-volume fluxes whose values come from
//! integrating a per-cell parabola over the region swept by the characteristic
//! through each face. Face values of the parabolas come either from a cubic
//! spline of the primitive function (PSM) or from a local cubic Lagrange
//! interpolant (LAG). Four limiters, an RK2 predictor-corrector driver and a
//! drift-kinetic scenario with a quasi-neutrality field solver sit on top.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flux;
pub mod limiters;
pub mod linalg;
pub mod mesh;
pub mod quasineutrality;
pub mod reconstruction;
pub mod scenario;
pub mod snapshot;
pub mod timestepping;

pub use error::{Error, Result};
