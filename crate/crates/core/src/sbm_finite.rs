//! Finite-rate symbiotic branching: Euler-Maruyama with full truncation.
//!
//! ```text
//! du(k) = A u(k) dt + sqrt(gamma u(k) v(k)) dB1(k)
//! dv(k) = A v(k) dt + sqrt(gamma u(k) v(k)) dB2(k),   d<B1, B2> = rho dt
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exitlaw::BoundaryPoint;
use crate::lattice::{HeatKernel, SiteGraph};

/// The pair `(u, v)` of nonnegative fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairField<T = f64> {
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl PairField<f64> {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::SizeMismatch { expected: u.len(), got: v.len() });
        }
        if let Some(k) = (0..u.len()).find(|&k| !(u[k] >= 0.0 && v[k] >= 0.0 && u[k].is_finite() && v[k].is_finite())) {
            return Err(Error::param("initial", format!("site {k} has ({}, {}), need finite nonnegative", u[k], v[k])));
        }
        Ok(PairField { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn from_boundary(points: &[BoundaryPoint<f64>]) -> Self {
        let (u, v) = points.iter().map(|b| b.to_pair()).unzip();
        PairField { u, v }
    }

    /// Per-site boundary points; fails if some site has `u v > 0`.
    pub fn to_boundary(&self) -> Result<Vec<BoundaryPoint<f64>>> {
        (0..self.len())
            .map(|k| {
                BoundaryPoint::from_pair(self.u[k], self.v[k])
                    .map_err(|_| Error::OffBoundary { site: k, u: self.u[k], v: self.v[k] })
            })
            .collect()
    }

    pub fn on_boundary(&self) -> bool {
        self.u.iter().zip(&self.v).all(|(&a, &b)| a >= 0.0 && b >= 0.0 && a * b == 0.0)
    }

    pub fn total_u(&self) -> f64 {
        self.u.iter().sum()
    }

    pub fn total_v(&self) -> f64 {
        self.v.iter().sum()
    }

    pub fn overlap(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a * b).sum()
    }

    /// Site `k` as a boundary point if it is on `E`.
    pub fn site(&self, k: usize) -> Option<BoundaryPoint<f64>> {
        BoundaryPoint::from_pair(self.u[k], self.v[k]).ok()
    }

    /// Magnitude of site `k`, or NaN if it is off `E`.
    pub fn magnitude(&self, k: usize) -> f64 {
        self.site(k).map_or(f64::NAN, |b| b.magnitude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Plain Euler-Maruyama on drift and noise.
    #[default]
    Euler,
    /// Exact heat step `P_dt`, then the noise increment.
    Split,
    /// Euler with substeps shrunk near the axes so that the noise at every
    /// site with `u v > 0` has standard deviation at most `ADAPT_KAPPA min(u, v)`.
    /// Plain truncated Euler is biased there: a nearly empty site behaves like
    /// a low-dimensional squared Bessel process and clamping converges slowly.
    Adaptive,
}

/// Noise-to-distance ratio targeted by [`Scheme::Adaptive`].
pub const ADAPT_KAPPA: f64 = 0.35;
/// Smallest adaptive substep as a fraction of `dt`.
pub const ADAPT_FLOOR: f64 = 1.0 / 1024.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub gamma: f64,
    pub rho: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
}

impl SdeConfig {
    /// Default step `1e-3 min(1, 1/gamma)`.
    pub fn new(gamma: f64, rho: f64, horizon: f64) -> Result<Self> {
        let dt = 1e-3 * (1.0f64).min(1.0 / gamma);
        let cfg = SdeConfig { gamma, rho, dt, horizon, scheme: Scheme::Euler };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        self.dt = dt;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{} must be nonnegative and finite", self.gamma)));
        }
        if !(self.rho >= -1.0 && self.rho <= 1.0) {
            return Err(Error::param("rho", format!("{} is outside [-1, 1]", self.rho)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("{} must be nonnegative", self.horizon)));
        }
        Ok(())
    }

    /// Steps coarser than `0.1 / gamma` are allowed but flagged.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gamma > 0.0 && self.dt > 0.1 / self.gamma {
            w.push(format!("dt = {} exceeds 0.1 / gamma = {}", self.dt, 0.1 / self.gamma));
        }
        w
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// What one step did.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepInfo {
    pub clamps: usize,
    pub du_total: f64,
    pub dv_total: f64,
    /// `gamma dt sum_k u(k) v(k)` at the start of the step.
    pub clock_increment: f64,
}

/// Reusable stepping state for one graph and configuration.
pub struct Stepper<'g> {
    graph: &'g SiteGraph<f64>,
    cfg: SdeConfig,
    heat: Option<HeatKernel<f64>>,
    orth: f64,
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl<'g> Stepper<'g> {
    pub fn new(graph: &'g SiteGraph<f64>, cfg: SdeConfig) -> Result<Self> {
        cfg.validate()?;
        let heat = match cfg.scheme {
            Scheme::Split => Some(graph.heat_semigroup(cfg.dt)?),
            Scheme::Euler | Scheme::Adaptive => None,
        };
        let n = graph.n_sites();
        Ok(Stepper {
            graph,
            cfg,
            heat,
            orth: (1.0 - cfg.rho * cfg.rho).max(0.0).sqrt(),
            du: vec![0.0; n],
            dv: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &SdeConfig {
        &self.cfg
    }

    /// Advances `state` by `dt`; the split scheme falls back to Euler drift
    /// when `dt` differs from the configured step.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut PairField, dt: f64, rng: &mut R) -> StepInfo {
        if self.cfg.scheme != Scheme::Adaptive {
            return self.substep(state, dt, rng);
        }
        let floor = dt * ADAPT_FLOOR;
        let mut info = StepInfo::default();
        let mut left = dt;
        while left > 0.0 {
            let h = self.adaptive_limit(state).max(floor).min(left);
            let part = self.substep(state, h, rng);
            info.clamps += part.clamps;
            info.du_total += part.du_total;
            info.dv_total += part.dv_total;
            info.clock_increment += part.clock_increment;
            left = if h >= left { 0.0 } else { left - h };
        }
        info
    }

    /// Largest step keeping the noise below `ADAPT_KAPPA min(u, v)` everywhere.
    fn adaptive_limit(&self, state: &PairField) -> f64 {
        let g = self.cfg.gamma;
        let mut h = f64::INFINITY;
        for (&u, &v) in state.u.iter().zip(&state.v) {
            if u * v > 0.0 && g > 0.0 {
                h = h.min(ADAPT_KAPPA * ADAPT_KAPPA * u.min(v) / (g * u.max(v)));
            }
        }
        h
    }

    fn substep<R: Rng + ?Sized>(&mut self, state: &mut PairField, dt: f64, rng: &mut R) -> StepInfo {
        let n = state.len();
        let g = self.cfg.gamma;
        let sq = dt.sqrt();
        let mut info = StepInfo::default();
        match &self.heat {
            Some(h) if (dt - self.cfg.dt).abs() < 1e-15 => {
                h.apply_into(&state.u, &mut self.du);
                h.apply_into(&state.v, &mut self.dv);
                for k in 0..n {
                    self.du[k] -= state.u[k];
                    self.dv[k] -= state.v[k];
                }
            }
            _ => {
                for k in 0..n {
                    self.du[k] = dt * self.graph.generator_at(&state.u, k);
                    self.dv[k] = dt * self.graph.generator_at(&state.v, k);
                }
            }
        }
        let mut overlap = 0.0;
        for k in 0..n {
            let uv = state.u[k] * state.v[k];
            overlap += uv;
            if uv > 0.0 {
                let z1: f64 = rng.sample(StandardNormal);
                let zp: f64 = rng.sample(StandardNormal);
                let amp = (g * uv).sqrt() * sq;
                self.du[k] += amp * z1;
                self.dv[k] += amp * (self.cfg.rho * z1 + self.orth * zp);
            }
        }
        info.clock_increment = g * dt * overlap;
        for k in 0..n {
            let (u0, v0) = (state.u[k], state.v[k]);
            let mut u1 = u0 + self.du[k];
            let mut v1 = v0 + self.dv[k];
            if u1 < 0.0 {
                u1 = 0.0;
                info.clamps += 1;
            }
            if v1 < 0.0 {
                v1 = 0.0;
                info.clamps += 1;
            }
            info.du_total += u1 - u0;
            info.dv_total += v1 - v0;
            state.u[k] = u1;
            state.v[k] = v1;
        }
        info
    }
}

/// One Euler step, building a fresh stepper.
pub fn step_euler<R: Rng + ?Sized>(
    state: &PairField,
    graph: &SiteGraph<f64>,
    cfg: &SdeConfig,
    rng: &mut R,
) -> Result<(PairField, StepInfo)> {
    graph.check_len(state.len())?;
    let mut st = Stepper::new(graph, *cfg)?;
    let mut next = state.clone();
    let info = st.step(&mut next, cfg.dt, rng);
    Ok((next, info))
}

/// Running realised brackets of the total masses.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BracketAccumulator {
    /// `sum (dU)^2` over steps.
    pub quad_u: f64,
    pub quad_v: f64,
    /// `sum dU dV`.
    pub cross: f64,
    /// `gamma int sum_k u v dt`, the predicted quadratic variation.
    pub clock: f64,
}

impl BracketAccumulator {
    pub fn push(&mut self, du: f64, dv: f64, clock_increment: f64) {
        self.quad_u += du * du;
        self.quad_v += dv * dv;
        self.cross += du * dv;
        self.clock += clock_increment;
    }
}

/// Per-step totals of a run, for offline bracket computation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MassTrajectory {
    pub gamma: f64,
    pub dt: f64,
    pub total_u: Vec<f64>,
    pub total_v: Vec<f64>,
    pub overlap: Vec<f64>,
}

/// Realised `([U], [V], [U, V], clock)` from a stored trajectory.
pub fn realized_brackets(traj: &MassTrajectory) -> BracketAccumulator {
    let mut acc = BracketAccumulator::default();
    for i in 1..traj.total_u.len() {
        acc.push(
            traj.total_u[i] - traj.total_u[i - 1],
            traj.total_v[i] - traj.total_v[i - 1],
            traj.gamma * traj.dt * traj.overlap[i - 1],
        );
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub time: f64,
    pub site: usize,
    pub u: f64,
    pub v: f64,
}

/// Total masses and the realised clock, sampled at the first step where the
/// clock passes each mark of a grid.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ClockSamples {
    pub clock: Vec<f64>,
    pub total_u: Vec<f64>,
    pub total_v: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MassObservables {
    pub total_u: f64,
    pub total_v: f64,
    pub brackets: BracketAccumulator,
    pub clock_samples: ClockSamples,
}

#[derive(Clone, Debug)]
pub struct SbmRun {
    pub records: Vec<ProbeRecord>,
    pub observables: MassObservables,
    pub clamps: usize,
    pub final_state: PairField,
    pub trajectory: Option<MassTrajectory>,
}

/// Options for [`simulate`] beyond the SDE itself.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    /// Record total masses each time the clock passes a multiple of this.
    pub clock_grid: Option<f64>,
    pub keep_trajectory: bool,
}

pub fn simulate<R: Rng + ?Sized>(
    graph: &SiteGraph<f64>,
    cfg: &SdeConfig,
    initial: &PairField,
    opts: &RunOptions,
    rng: &mut R,
) -> Result<SbmRun> {
    graph.check_len(initial.len())?;
    if let Some(&k) = opts.probes.iter().find(|&&k| k >= graph.n_sites()) {
        return Err(Error::param("probes", format!("site {k} out of range")));
    }
    let mut stepper = Stepper::new(graph, *cfg)?;
    let mut state = initial.clone();
    let mut times: Vec<f64> = opts.times.iter().copied().filter(|&t| t <= cfg.horizon).collect();
    times.sort_by(f64::total_cmp);
    let mut next_time = 0;
    let mut records = Vec::new();
    let record = |t: f64, s: &PairField, recs: &mut Vec<ProbeRecord>| {
        for &k in &opts.probes {
            recs.push(ProbeRecord { time: t, site: k, u: s.u[k], v: s.v[k] });
        }
    };
    while next_time < times.len() && times[next_time] <= 0.0 {
        record(0.0, &state, &mut records);
        next_time += 1;
    }
    let mut obs = MassObservables::default();
    let mut tu = state.total_u();
    let mut tv = state.total_v();
    let mut traj = opts.keep_trajectory.then(|| MassTrajectory {
        gamma: cfg.gamma,
        dt: cfg.dt,
        total_u: vec![tu],
        total_v: vec![tv],
        overlap: vec![state.overlap()],
    });
    let mut next_mark = opts.clock_grid.unwrap_or(f64::INFINITY);
    let mut clamps = 0;
    let mut t = 0.0;
    let steps = cfg.n_steps();
    for i in 0..steps {
        let dt = (cfg.horizon - t).min(cfg.dt);
        if dt <= 0.0 {
            break;
        }
        let info = stepper.step(&mut state, dt, rng);
        t = if i + 1 == steps { cfg.horizon } else { t + dt };
        clamps += info.clamps;
        tu += info.du_total;
        tv += info.dv_total;
        obs.brackets.push(info.du_total, info.dv_total, info.clock_increment);
        if let Some(gap) = opts.clock_grid {
            while obs.brackets.clock >= next_mark {
                obs.clock_samples.clock.push(obs.brackets.clock);
                obs.clock_samples.total_u.push(tu);
                obs.clock_samples.total_v.push(tv);
                next_mark += gap;
            }
        }
        if let Some(tr) = traj.as_mut() {
            tr.total_u.push(tu);
            tr.total_v.push(tv);
            tr.overlap.push(state.overlap());
        }
        while next_time < times.len() && times[next_time] <= t + 1e-12 {
            record(times[next_time], &state, &mut records);
            next_time += 1;
        }
    }
    while next_time < times.len() {
        record(times[next_time], &state, &mut records);
        next_time += 1;
    }
    obs.total_u = tu;
    obs.total_v = tv;
    Ok(SbmRun { records, observables: obs, clamps, final_state: state, trajectory: traj })
}

/// Result of a single-site run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NonspatialOutcome {
    pub u: f64,
    pub v: f64,
    /// `gamma int_0^T u v dt`.
    pub occupation: f64,
    pub absorbed: bool,
    pub clamps: usize,
}

/// Single site (`A = 0`) from `start` until absorption on `E` or the horizon.
pub fn nonspatial_simulate<R: Rng + ?Sized>(cfg: &SdeConfig, start: (f64, f64), rng: &mut R) -> Result<NonspatialOutcome> {
    cfg.validate()?;
    let (mut u, mut v) = start;
    if !(u >= 0.0 && v >= 0.0) {
        return Err(Error::param("start", "must be nonnegative"));
    }
    let orth = (1.0 - cfg.rho * cfg.rho).max(0.0).sqrt();
    let sq = cfg.dt.sqrt();
    let steps = cfg.n_steps();
    let mut occupation = 0.0;
    let mut clamps = 0;
    for _ in 0..steps {
        let uv = u * v;
        if uv == 0.0 {
            break;
        }
        occupation += cfg.gamma * uv * cfg.dt;
        let amp = (cfg.gamma * uv).sqrt() * sq;
        let z1: f64 = rng.sample(StandardNormal);
        let zp: f64 = rng.sample(StandardNormal);
        u += amp * z1;
        v += amp * (cfg.rho * z1 + orth * zp);
        if u < 0.0 {
            u = 0.0;
            clamps += 1;
        }
        if v < 0.0 {
            v = 0.0;
            clamps += 1;
        }
    }
    Ok(NonspatialOutcome { u, v, occupation, absorbed: u * v == 0.0, clamps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn negative_gamma_is_rejected_and_default_dt() {
        assert!(SdeConfig::new(-1.0, 0.0, 1.0).is_err());
        let c = SdeConfig::new(10.0, 0.0, 1.0).unwrap();
        assert!((c.dt - 1e-4).abs() < 1e-18);
        assert_eq!(c.n_steps(), 10_000);
    }

    #[test]
    fn sites_on_boundary_do_not_move_without_neighbours() {
        let g = SiteGraph::single_site();
        let cfg = SdeConfig::new(1.0, 0.2, 0.1).unwrap();
        let s = PairField::new(vec![2.0], vec![0.0]).unwrap();
        let run = simulate(&g, &cfg, &s, &RunOptions::default(), &mut stream(1, "t", 0)).unwrap();
        assert_eq!(run.final_state, s);
    }

    #[test]
    fn states_stay_nonnegative() {
        let g = SiteGraph::torus(1, 4).unwrap();
        let cfg = SdeConfig::new(5.0, -0.7, 0.5).unwrap();
        let s = PairField::new(vec![0.1; 4], vec![0.1; 4]).unwrap();
        let run = simulate(&g, &cfg, &s, &RunOptions::default(), &mut stream(2, "t", 0)).unwrap();
        assert!(run.final_state.u.iter().chain(&run.final_state.v).all(|&x| x >= 0.0));
    }
}
