//! Exit law of correlated planar Brownian motion from the open quadrant.
//!
//! A pair `(W1, W2)` with correlation `rho` started at `(u, v)` leaves
//! `(0, inf)^2` through one of the two half-axes. Mapping the quadrant to a
//! wedge of angle `theta = pi/2 + asin(rho)` and then to the half-plane by
//! `z -> z^(pi/theta)` makes the exit point a Cauchy variable, which gives
//! both the density and an exact sampler.

mod brownian;
mod jump;

pub use brownian::{simulate_brownian_exit, BrownianExit, BrownianExitConfig};
pub use jump::{nu_density, nu_scaled_density, TruncatedJumpMeasure};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::open01;

/// One of the two half-axes forming the boundary `E` of the quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    U,
    V,
}

/// A point of `E = ((0, inf) x {0}) u ({0} x (0, inf)) u {(0, 0)}`.
///
/// The origin is stored as `U` with magnitude zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint<T> {
    pub axis: Axis,
    pub magnitude: T,
}

impl<T: Real> BoundaryPoint<T> {
    pub fn new(axis: Axis, magnitude: T) -> Self {
        if magnitude == T::zero() {
            BoundaryPoint { axis: Axis::U, magnitude: T::zero() }
        } else {
            BoundaryPoint { axis, magnitude }
        }
    }

    pub fn origin() -> Self {
        BoundaryPoint { axis: Axis::U, magnitude: T::zero() }
    }

    pub fn from_pair(u: T, v: T) -> Result<Self> {
        if u < T::zero() || v < T::zero() || !(u.is_finite() && v.is_finite()) {
            return Err(Error::OffBoundary { site: 0, u: u.to_f64_lossy(), v: v.to_f64_lossy() });
        }
        match (u > T::zero(), v > T::zero()) {
            (true, true) => Err(Error::OffBoundary { site: 0, u: u.to_f64_lossy(), v: v.to_f64_lossy() }),
            (false, true) => Ok(BoundaryPoint { axis: Axis::V, magnitude: v }),
            _ => Ok(BoundaryPoint { axis: Axis::U, magnitude: u }),
        }
    }

    pub fn to_pair(self) -> (T, T) {
        match self.axis {
            Axis::U => (self.magnitude, T::zero()),
            Axis::V => (T::zero(), self.magnitude),
        }
    }
}

/// Wedge geometry for a correlation `rho` in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitLawParams<T> {
    rho: T,
    theta: T,
    p: T,
    phi: T,
    sigma: T,
}

impl<T: Real> ExitLawParams<T> {
    pub fn new(rho: T) -> Result<Self> {
        if !(rho >= -T::one() && rho <= T::one()) {
            return Err(Error::param("rho", format!("{rho} is outside [-1, 1]")));
        }
        let phi = rho.asin();
        let theta = T::FRAC_PI_2() + phi;
        let p = T::PI() / theta;
        let sigma = (T::one() - rho * rho).max(T::zero()).sqrt();
        Ok(ExitLawParams { rho, theta, p, phi, sigma })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// Wedge angle `pi/2 + asin(rho)`.
    pub fn theta(&self) -> T {
        self.theta
    }

    /// Critical exponent `pi / theta`; infinite at `rho = -1`.
    pub fn p(&self) -> T {
        self.p
    }

    /// `sqrt(1 - rho^2)`.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    fn is_atomic(&self) -> bool {
        self.rho == -T::one() || self.rho == T::one()
    }

    /// Start point mapped to the upper half-plane, normalised to unit modulus.
    /// Returns `(R, z1 / R^p, z2 / R^p)`.
    fn half_plane(&self, u: T, v: T) -> (T, T, T) {
        let y = (v - self.rho * u) / self.sigma;
        let r = u.hypot(y);
        let alpha = (y.atan2(u) + self.phi) * self.p;
        (r, alpha.cos(), alpha.sin().max(T::zero()))
    }
}

/// `p(rho) = pi / (pi/2 + asin(rho))`.
pub fn critical_exponent<T: Real>(rho: T) -> Result<T> {
    Ok(ExitLawParams::new(rho)?.p())
}

fn check_start<T: Real>(u: T, v: T) -> Result<()> {
    if !(u >= T::zero() && v >= T::zero() && u.is_finite() && v.is_finite()) {
        return Err(Error::param("start", format!("({u}, {v}) must be finite and nonnegative")));
    }
    Ok(())
}

/// Density of the exit point on `axis` at magnitude `r > 0`.
///
/// Fails with [`Error::Atomic`] when the law has atoms: a start on `E`, or
/// `|rho| = 1`.
pub fn exit_density<T: Real>(params: &ExitLawParams<T>, start: (T, T), axis: Axis, r: T) -> Result<T> {
    let (u, v) = start;
    check_start(u, v)?;
    if params.is_atomic() || u == T::zero() || v == T::zero() {
        return Err(Error::Atomic);
    }
    if !(r > T::zero()) {
        return Ok(T::zero());
    }
    let p = params.p;
    let (big_r, z1, z2) = params.half_plane(u, v);
    let xi = r / (params.sigma * big_r);
    let shift = match axis {
        Axis::U => xi.powf(p) - z1,
        Axis::V => xi.powf(p) + z1,
    };
    let num = p * xi.powf(p - T::one()) * z2;
    Ok(num / (T::PI() * params.sigma * big_r * (z2 * z2 + shift * shift)))
}

/// Exact draw of the exit point.
///
/// Starts on `E` are returned unchanged. At `rho = -1` the exit is at
/// `(u + v, 0)` with probability `u / (u + v)` and at `(0, u + v)` otherwise;
/// at `rho = 1` the difference `u - v` is conserved.
pub fn sample_exit<T: Real, R: Rng + ?Sized>(params: &ExitLawParams<T>, start: (T, T), rng: &mut R) -> BoundaryPoint<T> {
    let (u, v) = (start.0.max(T::zero()), start.1.max(T::zero()));
    if v == T::zero() {
        return BoundaryPoint::new(Axis::U, u);
    }
    if u == T::zero() {
        return BoundaryPoint::new(Axis::V, v);
    }
    if params.rho == -T::one() {
        let s = u + v;
        let w = T::lit(rng.random::<f64>());
        return if w * s < u { BoundaryPoint::new(Axis::U, s) } else { BoundaryPoint::new(Axis::V, s) };
    }
    if params.rho == T::one() {
        return if u >= v { BoundaryPoint::new(Axis::U, u - v) } else { BoundaryPoint::new(Axis::V, v - u) };
    }
    let (big_r, z1, z2) = params.half_plane(u, v);
    let w = T::lit(open01(rng));
    let c = z1 + z2 * (T::PI() * (w - T::lit(0.5))).tan();
    let inv_p = T::one() / params.p;
    let scale = params.sigma * big_r;
    if c > T::zero() {
        BoundaryPoint::new(Axis::U, scale * c.powf(inv_p))
    } else {
        BoundaryPoint::new(Axis::V, scale * (-c).powf(inv_p))
    }
}

/// Probability of leaving through the `U` half-axis.
pub fn exit_probability_u<T: Real>(params: &ExitLawParams<T>, start: (T, T)) -> Result<T> {
    let (u, v) = start;
    check_start(u, v)?;
    if v == T::zero() {
        return Ok(T::one());
    }
    if u == T::zero() {
        return Ok(T::zero());
    }
    if params.rho == -T::one() {
        return Ok(u / (u + v));
    }
    if params.rho == T::one() {
        return Ok(if u >= v { T::one() } else { T::zero() });
    }
    let (_, z1, z2) = params.half_plane(u, v);
    Ok(T::lit(0.5) + (z1 / z2).atan() / T::PI())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn exponent_values() {
        assert!((critical_exponent(0.0f64).unwrap() - 2.0).abs() < 1e-15);
        assert!((critical_exponent(-0.5f64).unwrap() - 3.0).abs() < 1e-14);
        assert!((critical_exponent(0.5f64).unwrap() - 1.5).abs() < 1e-14);
        assert!((critical_exponent(1.0f64).unwrap() - 1.0).abs() < 1e-15);
        assert!(critical_exponent(-1.0f64).unwrap().is_infinite());
        assert!(critical_exponent(1.5f64).is_err());
    }

    #[test]
    fn starts_on_boundary_are_fixed() {
        let p = ExitLawParams::new(0.3f64).unwrap();
        let mut r = stream(1, "t", 0);
        assert_eq!(sample_exit(&p, (2.0, 0.0), &mut r), BoundaryPoint::new(Axis::U, 2.0));
        assert_eq!(sample_exit(&p, (0.0, 0.5), &mut r), BoundaryPoint::new(Axis::V, 0.5));
        assert_eq!(sample_exit(&p, (0.0, 0.0), &mut r), BoundaryPoint::origin());
    }

    #[test]
    fn density_rejects_atomic_cases() {
        let p = ExitLawParams::new(0.3f64).unwrap();
        assert!(matches!(exit_density(&p, (1.0, 0.0), Axis::U, 1.0), Err(Error::Atomic)));
        let m = ExitLawParams::new(-1.0f64).unwrap();
        assert!(matches!(exit_density(&m, (1.0, 1.0), Axis::U, 1.0), Err(Error::Atomic)));
    }

    #[test]
    fn f32_sampler_runs() {
        let p = ExitLawParams::new(0.25f32).unwrap();
        let mut r = stream(2, "t", 0);
        for _ in 0..100 {
            let b = sample_exit(&p, (1.0f32, 1.0f32), &mut r);
            assert!(b.magnitude >= 0.0 && b.magnitude.is_finite());
        }
    }
}
