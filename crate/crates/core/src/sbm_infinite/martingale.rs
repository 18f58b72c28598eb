//! The martingale functional
//! `M_t = F(X_t, y) - F(X_0, y) - int_0^t <<A U_s, A V_s, y>> F(X_s, y) ds`.

use num_complex::Complex;

use crate::duals::{bracket, selfdual_functional, ComplexEstimate};
use crate::error::{Error, Result};
use crate::lattice::SiteGraph;
use crate::sbm_finite::PairField;

/// A test pair in `L^{f,E}`: finitely supported with `y1(k) y2(k) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPair(PairField);

impl TestPair {
    pub fn new(y: PairField) -> Result<Self> {
        for k in 0..y.len() {
            if !(y.u[k].is_finite() && y.v[k].is_finite()) || y.u[k] * y.v[k] != 0.0 {
                return Err(Error::param("test pair", format!("site {k} has y1 y2 != 0: ({}, {})", y.u[k], y.v[k])));
            }
        }
        Ok(TestPair(y))
    }

    pub fn field(&self) -> &PairField {
        &self.0
    }
}

/// `F(x, y)`.
pub fn test_functional(x: &PairField, y: &TestPair, rho: f64) -> Complex<f64> {
    selfdual_functional(x, &y.0, rho)
}

/// A continuous stretch of a path sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct PathSegment {
    pub dt: f64,
    pub states: Vec<PairField>,
}

/// Continuous segments separated by jumps, plus the state at the final time.
#[derive(Clone, Debug)]
pub struct Path {
    pub initial: PairField,
    pub segments: Vec<PathSegment>,
    pub terminal: PairField,
}

fn drift_integrand(graph: &SiteGraph<f64>, x: &PairField, y: &TestPair, rho: f64) -> Complex<f64> {
    let n = x.len();
    let au: Vec<f64> = (0..n).map(|k| graph.generator_at(&x.u, k)).collect();
    let av: Vec<f64> = (0..n).map(|k| graph.generator_at(&x.v, k)).collect();
    bracket(&au, &av, &y.0.u, &y.0.v, rho) * test_functional(x, y, rho)
}

/// One realisation of `M_t`, with the time integral by the trapezoid rule on
/// each segment.
pub fn martingale_functional(graph: &SiteGraph<f64>, path: &Path, y: &TestPair, rho: f64) -> Result<Complex<f64>> {
    graph.check_len(path.initial.len())?;
    graph.check_len(y.0.len())?;
    let mut integral = Complex::new(0.0, 0.0);
    for seg in &path.segments {
        let vals: Vec<Complex<f64>> = seg.states.iter().map(|s| drift_integrand(graph, s, y, rho)).collect();
        for w in vals.windows(2) {
            integral += (w[0] + w[1]) * (0.5 * seg.dt);
        }
    }
    Ok(test_functional(&path.terminal, y, rho) - test_functional(&path.initial, y, rho) - integral)
}

/// Mean of `M_t` over independent paths.
pub fn martingale_functional_check(
    graph: &SiteGraph<f64>,
    paths: &[Path],
    y: &TestPair,
    rho: f64,
) -> Result<ComplexEstimate> {
    let vals = paths.iter().map(|p| martingale_functional(graph, p, y, rho)).collect::<Result<Vec<_>>>()?;
    Ok(ComplexEstimate::from_samples(vals))
}
