//! The mixed Laplace-Fourier self-duality functional.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sbm_finite::PairField;
use crate::stats::MeanVar;

/// `<<x1, x2, y1, y2>>_rho = sum_k [ -sqrt(1-rho) (x1+x2)(y1+y2) + i sqrt(1+rho) (x1-x2)(y1-y2) ]`.
pub fn bracket<T: Real>(x1: &[T], x2: &[T], y1: &[T], y2: &[T], rho: T) -> Complex<T> {
    let a = (T::one() - rho).sqrt();
    let b = (T::one() + rho).sqrt();
    let mut re = T::zero();
    let mut im = T::zero();
    for k in 0..x1.len() {
        re = re - a * (x1[k] + x2[k]) * (y1[k] + y2[k]);
        im = im + b * (x1[k] - x2[k]) * (y1[k] - y2[k]);
    }
    Complex::new(re, im)
}

/// `F(x, y) = exp(<<x, y>>_rho)`.
pub fn selfdual_functional(x: &PairField, y: &PairField, rho: f64) -> Complex<f64> {
    bracket(&x.u, &x.v, &y.u, &y.v, rho).exp()
}

/// A complex mean with componentwise standard errors.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ComplexEstimate {
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub samples: u64,
}

impl ComplexEstimate {
    pub fn from_samples(xs: impl IntoIterator<Item = Complex<f64>>) -> Self {
        let mut re = MeanVar::default();
        let mut im = MeanVar::default();
        for z in xs {
            re.push(z.re);
            im.push(z.im);
        }
        ComplexEstimate { re: re.mean, im: im.mean, se_re: re.se(), se_im: im.se(), samples: re.count }
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &ComplexEstimate) -> ComplexEstimate {
        ComplexEstimate {
            re: self.re - other.re,
            im: self.im - other.im,
            se_re: self.se_re.hypot(other.se_re),
            se_im: self.se_im.hypot(other.se_im),
            samples: self.samples.min(other.samples),
        }
    }

    /// Both components within `k` standard errors of zero.
    pub fn consistent_with_zero(&self, k: f64) -> bool {
        self.re.abs() <= k * self.se_re && self.im.abs() <= k * self.se_im
    }
}

/// `E F(u_t, v_t, y0) - E F(x0, y_t)` from an ensemble started at `x0` and an
/// independent ensemble started at `y0`.
pub fn selfdual_check(
    forward: &[PairField],
    backward: &[PairField],
    x0: &PairField,
    y0: &PairField,
    rho: f64,
) -> Result<ComplexEstimate> {
    if x0.len() != y0.len() {
        return Err(Error::SizeMismatch { expected: x0.len(), got: y0.len() });
    }
    if let Some(s) = forward.iter().chain(backward).find(|s| s.len() != x0.len()) {
        return Err(Error::SizeMismatch { expected: x0.len(), got: s.len() });
    }
    let lhs = ComplexEstimate::from_samples(forward.iter().map(|s| selfdual_functional(s, y0, rho)));
    let rhs = ComplexEstimate::from_samples(backward.iter().map(|s| selfdual_functional(x0, s, rho)));
    Ok(lhs.minus(&rhs))
}
