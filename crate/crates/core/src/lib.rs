//! Symbiotic branching on finite site graphs.
//!
//! Two coupled nonnegative fields `(u, v)` on a finite graph with generator
//! `A`, driven by correlated noise of strength `gamma` and correlation `rho`.
//! The crate covers the finite-rate SDE, its infinite-rate limit living on the
//! boundary of the quadrant, the wedge exit law that drives that limit, the
//! moment and self dualities, and the voter-model special case `rho = -1`.
//!
//! Analytic building blocks (graphs, heat kernels, the exit law) are generic
//! over [`Real`]; the simulators run in `f64`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod duals;
pub mod error;
pub mod exitlaw;
pub mod harness;
pub mod lattice;
pub mod quad;
pub mod real;
pub mod rng;
pub mod sbm_finite;
pub mod sbm_infinite;
pub mod stats;
pub mod voter;

pub use error::{Error, Result};
pub use exitlaw::{Axis, BoundaryPoint, ExitLawParams};
pub use lattice::{HeatKernel, ScalarField, SiteGraph};
pub use real::Real;
pub use sbm_finite::PairField;

pub type SiteGraph64 = SiteGraph<f64>;
pub type SiteGraph32 = SiteGraph<f32>;
pub type HeatKernel64 = HeatKernel<f64>;
pub type HeatKernel32 = HeatKernel<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type ExitLaw = ExitLawParams<f64>;
pub type ExitLaw32 = ExitLawParams<f32>;
pub type BoundaryPoint64 = BoundaryPoint<f64>;
