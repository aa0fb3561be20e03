//! Numerical laboratory for the constrained plasma problem on unit-volume
//! balls: radial discretization, Emden thresholds, solution branches,
//! nonlocal spectra, Sobolev constants and the variational formulation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod emden;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod sobolev;
pub mod spectrum;
pub mod variational;

pub use branch::{BranchPoint, SweepTrace, Tangent};
pub use emden::{EmdenProfile, ProblemParams};
pub use error::{Error, Result};
pub use grid::{GridFunction, RadialGrid};
