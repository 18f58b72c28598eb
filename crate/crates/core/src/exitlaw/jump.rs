//! The jump measure `nu` of the infinite-rate process and its truncation.
//!
//! `nu` has density `p^2 sigma y^(p-1) / (pi (y^p -+ 1)^2)` on the `U` and
//! `V` half-axes. It has infinite mass near the pole `(1, 0)`; the truncated
//! measure removes a window `(1 - eps', 1 + eps)` around it, with `eps'`
//! chosen so that the first coordinate stays centred.

use rand::Rng;

use super::{Axis, BoundaryPoint, ExitLawParams};
use crate::error::{Error, Result};
use crate::quad;
use crate::real::Real;
use crate::rng::open01;

/// Density of `nu` at a point of `E`. Undefined at the pole `(1, 0)`.
pub fn nu_density<T: Real>(params: &ExitLawParams<T>, point: BoundaryPoint<T>) -> Result<T> {
    nu_scaled_density(params, T::one(), point)
}

/// Density of `nu_(a,0)`, the jump measure seen from `(a, 0)`.
pub fn nu_scaled_density<T: Real>(params: &ExitLawParams<T>, a: T, point: BoundaryPoint<T>) -> Result<T> {
    if params.rho() == -T::one() {
        return Err(Error::Atomic);
    }
    if !(a > T::zero()) {
        return Err(Error::param("a", format!("scale {a} must be positive")));
    }
    let y = point.magnitude;
    if !(y > T::zero()) {
        return Ok(T::zero());
    }
    let p = params.p();
    let ap = a.powf(p);
    let yp = y.powf(p);
    let gap = match point.axis {
        Axis::U => {
            if yp == ap {
                return Err(Error::Pole(y.to_f64_lossy()));
            }
            yp - ap
        }
        Axis::V => yp + ap,
    };
    let num = p * p * a.powf(p - T::one()) * params.sigma() * y.powf(p - T::one());
    Ok(num / (T::PI() * gap * gap))
}

const TABLE_KNOTS: usize = 4096;
const LOW_CUT: f64 = 1e-6;
const HIGH_CUT: f64 = 1e6;

/// Inverse CDF on tabulated knots, with power-law tails beyond them.
#[derive(Clone, Debug)]
struct InverseCdf {
    knots: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
    p: f64,
    upper_tail: bool,
}

impl InverseCdf {
    fn build(knots: Vec<f64>, density: &dyn Fn(f64) -> f64, p: f64, upper_tail: bool) -> Result<Self> {
        let lower = quad::integrate_pow(density, 0.0, knots[0], p)?;
        let mut cum = Vec::with_capacity(knots.len());
        cum.push(lower);
        let mut acc = lower;
        for w in knots.windows(2) {
            if w[1] > w[0] {
                acc += quad::adaptive(density, w[0], w[1], 0.0, 1e-12)?;
            }
            cum.push(acc);
        }
        let total = if upper_tail {
            acc + quad::integrate_tail(density, *knots.last().expect("knots"), p + 1.0)?
        } else {
            acc
        };
        Ok(InverseCdf { knots, cum, total, p, upper_tail })
    }

    fn quantile(&self, w: f64) -> f64 {
        let target = w * self.total;
        let last = self.knots.len() - 1;
        if target < self.cum[0] {
            return self.knots[0] * (target / self.cum[0]).powf(1.0 / self.p);
        }
        if target >= self.cum[last] {
            if !self.upper_tail {
                return self.knots[last];
            }
            let s_hi = self.total - self.cum[last];
            let s = (self.total - target).max(f64::MIN_POSITIVE);
            return self.knots[last] * (s / s_hi).powf(-1.0 / self.p);
        }
        // cum[i] <= target < cum[i + 1]; flat intervals are never selected.
        let i = self.cum.partition_point(|&c| c <= target) - 1;
        let (c0, c1) = (self.cum[i], self.cum[i + 1]);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        k0 + (target - c0) / (c1 - c0) * (k1 - k0)
    }
}

fn geometric(from: f64, to: f64, count: usize) -> impl Iterator<Item = f64> {
    let ratio = (to / from).ln() / (count - 1) as f64;
    (0..count).map(move |i| from * (ratio * i as f64).exp())
}

/// `nu` restricted to `E` minus the window `(1 - eps', 1 + eps) x {0}`.
#[derive(Clone, Debug)]
pub struct TruncatedJumpMeasure {
    params: ExitLawParams<f64>,
    eps: f64,
    eps_prime: f64,
    mass_u: f64,
    mass_v: f64,
    m2: f64,
    balance: f64,
    u_table: InverseCdf,
    v_table: InverseCdf,
}

impl TruncatedJumpMeasure {
    /// Truncates `nu` at `1 + eps` and solves for the lower cut `1 - eps'`
    /// that makes `int (y1 - 1) d nu = 0`.
    ///
    /// For negative `rho` the centring needs `eps` small enough that the mass
    /// beyond `1 + eps` outweighs the `V` branch; otherwise the root is not
    /// bracketed and an error is returned.
    pub fn new(rho: f64, eps: f64) -> Result<Self> {
        let params = ExitLawParams::new(rho)?;
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::param("rho", format!("truncation needs rho in (-1, 1), got {rho}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param("eps", format!("{eps} must lie in (0, 1)")));
        }
        let p = params.p();
        let k = p * p * params.sigma() / std::f64::consts::PI;
        let dens_u = move |y: f64| {
            let d = y.powf(p) - 1.0;
            k * y.powf(p - 1.0) / (d * d)
        };
        let dens_v = move |y: f64| {
            let d = y.powf(p) + 1.0;
            k * y.powf(p - 1.0) / (d * d)
        };

        let mass_v = quad::integrate_pow(dens_v, 0.0, 1.0, p)? + quad::integrate_tail(dens_v, 1.0, p + 1.0)?;
        let m2 = quad::integrate_pow(|y| y * dens_v(y), 0.0, 1.0, p)?
            + quad::integrate_tail(|y| y * dens_v(y), 1.0, p)?;
        let pos = quad::integrate_tail(|y| (y - 1.0) * dens_u(y), 1.0 + eps, p)?;
        let neg = |e: f64| quad::integrate_pow(|y| (y - 1.0) * dens_u(y), 0.0, 1.0 - e, p);
        let residual = |e: f64| pos + neg(e).unwrap_or(f64::NAN) - mass_v;

        if !(residual(1.0) > 0.0) {
            return Err(Error::NotBracketed(format!(
                "rho = {rho}, eps = {eps}: mass beyond 1 + eps cannot balance the V branch; use a smaller eps"
            )));
        }
        let mut lo = eps.min(0.5);
        while residual(lo) >= 0.0 {
            lo *= 0.1;
            if lo < 1e-15 {
                return Err(Error::NotBracketed(format!("rho = {rho}, eps = {eps}: no lower bracket")));
            }
        }
        let eps_prime = quad::brent(&residual, lo, 1.0, 1e-15)?;
        let balance = residual(eps_prime);

        let mut low: Vec<f64> = geometric(LOW_CUT, 1.0 - eps_prime, TABLE_KNOTS / 2)
            .chain(geometric(eps_prime, 1.0 - LOW_CUT, TABLE_KNOTS / 2).map(|o| 1.0 - o))
            .filter(|&y| y >= LOW_CUT && y <= 1.0 - eps_prime)
            .collect();
        low.sort_by(f64::total_cmp);
        low.dedup();
        *low.last_mut().expect("knots") = 1.0 - eps_prime;
        let u_knots: Vec<f64> =
            low.into_iter().chain(geometric(eps, HIGH_CUT, TABLE_KNOTS / 2).map(|o| 1.0 + o)).collect();
        let u_density = move |y: f64| if y > 1.0 - eps_prime && y < 1.0 + eps { 0.0 } else { dens_u(y) };
        let u_table = InverseCdf::build(u_knots, &u_density, p, true)?;
        let v_table = InverseCdf::build(geometric(LOW_CUT, HIGH_CUT, TABLE_KNOTS).collect(), &dens_v, p, true)?;

        Ok(TruncatedJumpMeasure {
            params,
            eps,
            eps_prime,
            mass_u: u_table.total,
            mass_v,
            m2,
            balance,
            u_table,
            v_table,
        })
    }

    pub fn params(&self) -> &ExitLawParams<f64> {
        &self.params
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    pub fn mass_u(&self) -> f64 {
        self.mass_u
    }

    pub fn mass_v(&self) -> f64 {
        self.mass_v
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_u + self.mass_v
    }

    /// `int y2 d nu`, the `V`-branch first moment.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// `int (y1 - 1) d nu` at the chosen cut; zero up to root-finding error.
    pub fn balance(&self) -> f64 {
        self.balance
    }

    /// Density of the truncated measure; zero inside the removed window.
    pub fn density(&self, point: BoundaryPoint<f64>) -> Result<f64> {
        let y = point.magnitude;
        if point.axis == Axis::U && y > 1.0 - self.eps_prime && y < 1.0 + self.eps {
            return Ok(0.0);
        }
        nu_density(&self.params, point)
    }

    /// Draws a mark from the normalised truncated measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint<f64> {
        let branch = rng.random::<f64>() * self.total_mass();
        let w = open01(rng);
        if branch < self.mass_u {
            BoundaryPoint::new(Axis::U, self.u_table.quantile(w))
        } else {
            BoundaryPoint::new(Axis::V, self.v_table.quantile(w))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_correlation_cut_is_nearly_symmetric() {
        let m = TruncatedJumpMeasure::new(0.0, 0.1).unwrap();
        assert!((m.eps_prime() - 0.100_016_8).abs() < 1e-6, "{}", m.eps_prime());
        assert!(m.balance().abs() < 1e-10);
        assert!((m.m2() - 1.0).abs() < 1e-10);
        assert!((m.mass_v() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn negative_rho_with_wide_window_is_rejected() {
        assert!(matches!(TruncatedJumpMeasure::new(-0.5, 0.2), Err(Error::NotBracketed(_))));
    }

    #[test]
    fn density_vanishes_in_window_and_pole_is_an_error() {
        let m = TruncatedJumpMeasure::new(0.3, 0.1).unwrap();
        assert_eq!(m.density(BoundaryPoint::new(Axis::U, 1.0)).unwrap(), 0.0);
        assert!(matches!(nu_density(m.params(), BoundaryPoint::new(Axis::U, 1.0)), Err(Error::Pole(_))));
    }
}
