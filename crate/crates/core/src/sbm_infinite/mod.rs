//! The infinite-rate process on `E^S`.
//!
//! Two constructions are provided: a Trotter scheme that alternates exact
//! heat flow with projection onto `E` through the exit law, and a
//! piecewise-deterministic process driven by the truncated jump measure.

mod martingale;
mod pdmp;
mod trotter;

pub use martingale::{martingale_functional, martingale_functional_check, test_functional, Path, PathSegment, TestPair};
pub use pdmp::{apply_jump, intensity, pdmp_simulate, JumpLaw, PdmpConfig, PdmpEvent, PdmpRun};
pub use trotter::{trotter_simulate, trotter_step, Trotter};

use crate::error::{Error, Result};
use crate::exitlaw::BoundaryPoint;
use crate::sbm_finite::PairField;

/// A configuration of `E^S`, one boundary point per site.
pub type BoundaryField = Vec<BoundaryPoint<f64>>;

/// Checks that every site of `state` lies on `E`.
pub fn check_on_boundary(state: &PairField) -> Result<()> {
    for k in 0..state.len() {
        let (u, v) = (state.u[k], state.v[k]);
        if !(u >= 0.0 && v >= 0.0) || u * v != 0.0 {
            return Err(Error::OffBoundary { site: k, u, v });
        }
    }
    Ok(())
}

/// States at requested times.
#[derive(Clone, Debug, Default)]
pub struct BoundaryTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PairField>,
}

pub(crate) fn sorted_times(times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    if let Some(&t) = times.iter().find(|&&t| !(t >= 0.0 && t <= horizon)) {
        return Err(Error::param("times", format!("sample time {t} outside [0, {horizon}]")));
    }
    let mut ts = times.to_vec();
    ts.sort_by(f64::total_cmp);
    Ok(ts)
}
