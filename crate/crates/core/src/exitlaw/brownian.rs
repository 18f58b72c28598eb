//! Direct simulation of correlated Brownian motion until it leaves the quadrant.
//!
//! Increments are exact Gaussians; the step is `max(eta d^2, dt_min)` where
//! `d` is the distance to the boundary in decorrelated coordinates, so large
//! steps are taken only where a crossing inside the step is negligible.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Axis, BoundaryPoint, ExitLawParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BrownianExitConfig {
    pub dt_min: f64,
    pub eta: f64,
    pub t_max: f64,
}

impl Default for BrownianExitConfig {
    fn default() -> Self {
        BrownianExitConfig { dt_min: 1e-4, eta: 0.01, t_max: 1e9 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BrownianExit {
    pub point: BoundaryPoint<f64>,
    pub time: f64,
    /// The path was still inside at `t_max`; `point` is then meaningless.
    pub censored: bool,
}

fn distance_to_ray(x: f64, y: f64, ex: f64, ey: f64) -> f64 {
    let along = x * ex + y * ey;
    if along >= 0.0 {
        (x * ey - y * ex).abs()
    } else {
        x.hypot(y)
    }
}

/// Runs one path from `start` until it hits `E` or `t_max` elapses.
pub fn simulate_brownian_exit<R: Rng + ?Sized>(
    params: &ExitLawParams<f64>,
    start: (f64, f64),
    cfg: &BrownianExitConfig,
    rng: &mut R,
) -> Result<BrownianExit> {
    let rho = params.rho();
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::param("rho", "Brownian simulation needs |rho| < 1"));
    }
    let sigma = params.sigma();
    let (mut w1, mut w2) = start;
    if !(w1 >= 0.0 && w2 >= 0.0) {
        return Err(Error::param("start", "must be in the closed quadrant"));
    }
    if w1 == 0.0 || w2 == 0.0 {
        let point = BoundaryPoint::from_pair(w1, w2)?;
        return Ok(BrownianExit { point, time: 0.0, censored: false });
    }
    let mut t = 0.0;
    while t < cfg.t_max {
        // Decorrelated coordinates: the U half-axis points along (sigma, -rho),
        // the V half-axis along (0, 1).
        let x = w1;
        let y = (w2 - rho * w1) / sigma;
        let d = distance_to_ray(x, y, sigma, -rho).min(distance_to_ray(x, y, 0.0, 1.0));
        let dt = (cfg.eta * d * d).max(cfg.dt_min);
        let sq = dt.sqrt();
        let z1: f64 = rng.sample(StandardNormal);
        let zp: f64 = rng.sample(StandardNormal);
        let n1 = w1 + sq * z1;
        let n2 = w2 + sq * (rho * z1 + sigma * zp);
        if n1 > 0.0 && n2 > 0.0 {
            w1 = n1;
            w2 = n2;
            t += dt;
            continue;
        }
        let l1 = if n1 <= 0.0 { w1 / (w1 - n1) } else { f64::INFINITY };
        let l2 = if n2 <= 0.0 { w2 / (w2 - n2) } else { f64::INFINITY };
        let point = if l1 <= l2 {
            BoundaryPoint::new(Axis::V, (w2 + l1 * (n2 - w2)).max(0.0))
        } else {
            BoundaryPoint::new(Axis::U, (w1 + l2 * (n1 - w1)).max(0.0))
        };
        return Ok(BrownianExit { point, time: t + l1.min(l2) * dt, censored: false });
    }
    Ok(BrownianExit { point: BoundaryPoint::origin(), time: cfg.t_max, censored: true })
}
