//! Dualities: the colour-flipping moment dual, coalescing walks for the voter
//! case, and the self-duality functional.

mod coalescing;
mod moment;
mod selfdual;

pub use coalescing::{coalescing_dual_estimate, CoalescingEstimate};
pub use moment::{moment_dual_estimate, moment_dual_replica, DualEstimate, MomentDualSpec};
pub use selfdual::{bracket, selfdual_check, selfdual_functional, ComplexEstimate};
