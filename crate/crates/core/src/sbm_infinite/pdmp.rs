//! Piecewise-deterministic construction.
//!
//! Site `k` jumps at rate `I(k) nu(E)` with `I(k) = A V(k) / U(k)` if `k` is
//! on the `U` axis (and symmetrically on `V`). A jump with mark `y` sends
//! `(U(k), 0)` to `U(k) (y1, y2)`. Between jumps the fields follow
//! `dU = A U - I (m2 V + b U)`, `dV = A V - I (m2 U + b V)`, which keeps every
//! site on `E` once the off-axis component is projected away.

use rand::Rng;
use rand_distr::Exp1;

use super::{check_on_boundary, sorted_times, BoundaryTrajectory};
use crate::error::{Error, Result};
use crate::exitlaw::{sample_exit, Axis, BoundaryPoint, ExitLawParams, TruncatedJumpMeasure};
use crate::lattice::SiteGraph;
use crate::rng::SimRng;
use crate::sbm_finite::PairField;

/// Jump mechanism of the process.
#[derive(Clone, Debug)]
pub enum JumpLaw {
    /// Truncated `nu` for `rho` in `(-1, 1)`.
    Truncated(TruncatedJumpMeasure),
    /// `rho = -1`: the unit mass at `(0, 1)`, i.e. a swap of the two types.
    OpinionSwap,
}

impl JumpLaw {
    pub fn params(&self) -> ExitLawParams<f64> {
        match self {
            JumpLaw::Truncated(m) => *m.params(),
            JumpLaw::OpinionSwap => ExitLawParams::new(-1.0).expect("valid"),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            JumpLaw::Truncated(m) => m.total_mass(),
            JumpLaw::OpinionSwap => 1.0,
        }
    }

    pub fn m2(&self) -> f64 {
        match self {
            JumpLaw::Truncated(m) => m.m2(),
            JumpLaw::OpinionSwap => 1.0,
        }
    }

    /// `int (y1 - 1) d nu`.
    pub fn balance(&self) -> f64 {
        match self {
            JumpLaw::Truncated(m) => m.balance(),
            JumpLaw::OpinionSwap => -1.0,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint<f64> {
        match self {
            JumpLaw::Truncated(m) => m.sample(rng),
            JumpLaw::OpinionSwap => BoundaryPoint::new(Axis::V, 1.0),
        }
    }
}

/// Jump intensity `I(k)` of a state on `E`; zero at the origin.
pub fn intensity(graph: &SiteGraph<f64>, state: &PairField, k: usize) -> Result<f64> {
    let (u, v) = (state.u[k], state.v[k]);
    if u > 0.0 && v > 0.0 {
        return Err(Error::OffBoundary { site: k, u, v });
    }
    Ok(intensity_unchecked(graph, state, k))
}

#[inline]
fn intensity_unchecked(graph: &SiteGraph<f64>, state: &PairField, k: usize) -> f64 {
    let (u, v) = (state.u[k], state.v[k]);
    if u > 0.0 {
        graph.generator_at(&state.v, k) / u
    } else if v > 0.0 {
        graph.generator_at(&state.u, k) / v
    } else {
        0.0
    }
}

/// Jump at site `k` with mark `y`: a `U`-axis mark rescales the magnitude and
/// keeps the axis, a `V`-axis mark rescales it and swaps the axis.
pub fn apply_jump(state: &mut PairField, k: usize, mark: BoundaryPoint<f64>) {
    let (u, v) = (state.u[k], state.v[k]);
    let (y1, y2) = mark.to_pair();
    if u > 0.0 {
        state.u[k] = u * y1;
        state.v[k] = u * y2;
    } else {
        state.u[k] = v * y2;
        state.v[k] = v * y1;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PdmpConfig {
    /// Upper bound on a flow substep.
    pub max_substep: f64,
    /// Thinning bound is `safety * max_k I(k) * nu(E)`.
    pub safety: f64,
}

impl Default for PdmpConfig {
    fn default() -> Self {
        PdmpConfig { max_substep: 1e-2, safety: 1.5 }
    }
}

/// Observation points passed to the optional observer.
#[derive(Clone, Copy, Debug)]
pub enum PdmpEvent<'a> {
    Flow { time: f64, state: &'a PairField },
    Jump { time: f64, site: usize, state: &'a PairField },
}

#[derive(Clone, Debug, Default)]
pub struct PdmpRun {
    pub trajectory: BoundaryTrajectory,
    pub jumps: usize,
    pub rejected: usize,
    /// Substeps halved because a rate exceeded the thinning bound.
    pub halvings: usize,
    /// Total `|off-axis|` mass removed when projecting the flow onto `E`.
    pub zeroed_mass: f64,
    /// Sites at the origin that received mass of both types and were
    /// resolved through the exit law.
    pub origin_resolutions: usize,
}

struct Flow<'a> {
    graph: &'a SiteGraph<f64>,
    params: ExitLawParams<f64>,
    m2: f64,
    b: f64,
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl Flow<'_> {
    /// Euler step of length `h` followed by projection onto `E`.
    fn advance(&mut self, s: &mut PairField, h: f64, rng: &mut SimRng, run: &mut PdmpRun) {
        let n = s.len();
        for k in 0..n {
            let au = self.graph.generator_at(&s.u, k);
            let av = self.graph.generator_at(&s.v, k);
            let i = intensity_unchecked(self.graph, s, k);
            self.du[k] = au - i * (self.m2 * s.v[k] + self.b * s.u[k]);
            self.dv[k] = av - i * (self.m2 * s.u[k] + self.b * s.v[k]);
        }
        for k in 0..n {
            let was_u = s.u[k] > 0.0;
            let was_v = s.v[k] > 0.0;
            let mut u = s.u[k] + h * self.du[k];
            let mut v = s.v[k] + h * self.dv[k];
            if was_u {
                run.zeroed_mass += v.abs();
                v = 0.0;
            } else if was_v {
                run.zeroed_mass += u.abs();
                u = 0.0;
            }
            if u < 0.0 {
                run.zeroed_mass += -u;
                u = 0.0;
            }
            if v < 0.0 {
                run.zeroed_mass += -v;
                v = 0.0;
            }
            if u > 0.0 && v > 0.0 {
                run.origin_resolutions += 1;
                let p = sample_exit(&self.params, (u, v), rng).to_pair();
                u = p.0;
                v = p.1;
            }
            s.u[k] = u;
            s.v[k] = v;
        }
    }
}

/// Simulates the jump process to `horizon`, recording the state at each
/// sample time.
pub fn pdmp_simulate(
    graph: &SiteGraph<f64>,
    jumps: &JumpLaw,
    horizon: f64,
    initial: &PairField,
    sample_times: &[f64],
    cfg: &PdmpConfig,
    rng: &mut SimRng,
    mut observer: Option<&mut dyn FnMut(PdmpEvent<'_>)>,
) -> Result<PdmpRun> {
    graph.check_len(initial.len())?;
    check_on_boundary(initial)?;
    let times = sorted_times(sample_times, horizon)?;
    let n = graph.n_sites();
    let nu_mass = jumps.total_mass();
    let mut flow = Flow {
        graph,
        params: jumps.params(),
        m2: jumps.m2(),
        b: jumps.balance(),
        du: vec![0.0; n],
        dv: vec![0.0; n],
    };
    let mut run = PdmpRun::default();
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut next_sample = 0;
    let mut rates = vec![0.0; n];

    loop {
        while next_sample < times.len() && times[next_sample] <= t + 1e-12 {
            run.trajectory.times.push(times[next_sample]);
            run.trajectory.states.push(state.clone());
            next_sample += 1;
        }
        if t >= horizon - 1e-12 {
            break;
        }
        let mut max_rate: f64 = 0.0;
        for (k, r) in rates.iter_mut().enumerate() {
            *r = intensity_unchecked(graph, &state, k) * nu_mass;
            if !r.is_finite() || *r < 0.0 {
                return Err(Error::NonFinite { context: format!("intensity at site {k}") });
            }
            max_rate = max_rate.max(*r);
        }
        let total: f64 = rates.iter().sum();
        let stop = times.get(next_sample).copied().unwrap_or(horizon).min(horizon);
        let mut h = cfg.max_substep.min(stop - t);
        if total > 0.0 {
            h = h.min(0.1 / total);
        }
        let bound = cfg.safety * max_rate;
        if bound == 0.0 {
            flow.advance(&mut state, h, rng, &mut run);
            t = if stop - t <= h { stop } else { t + h };
            if let Some(obs) = observer.as_mut() {
                obs(PdmpEvent::Flow { time: t, state: &state });
            }
            continue;
        }

        // Thinning inside [t, t + h]: candidates at rate n * bound.
        let saved_state = state.clone();
        let saved_rng = rng.clone();
        let saved = (run.jumps, run.rejected, run.zeroed_mass, run.origin_resolutions);
        let mut h_try = h;
        loop {
            let mut tau: f64 = rng.sample::<f64, _>(Exp1) / (n as f64 * bound);
            let mut local = 0.0;
            let mut violated = false;
            let mut jumped = false;
            while tau < h_try {
                flow.advance(&mut state, tau - local, rng, &mut run);
                local = tau;
                let k = rng.random_range(0..n);
                let r = intensity_unchecked(graph, &state, k) * nu_mass;
                if r > bound {
                    violated = true;
                    break;
                }
                if rng.random::<f64>() * bound < r {
                    let mark = jumps.sample(rng);
                    apply_jump(&mut state, k, mark);
                    run.jumps += 1;
                    jumped = true;
                    if let Some(obs) = observer.as_mut() {
                        obs(PdmpEvent::Jump { time: t + local, site: k, state: &state });
                    }
                    break;
                }
                run.rejected += 1;
                tau += rng.sample::<f64, _>(Exp1) / (n as f64 * bound);
            }
            if violated {
                state = saved_state.clone();
                *rng = saved_rng.clone();
                (run.jumps, run.rejected, run.zeroed_mass, run.origin_resolutions) = saved;
                run.halvings += 1;
                h_try *= 0.5;
                if h_try < 1e-12 {
                    return Err(Error::NonFinite { context: "thinning substep collapsed".into() });
                }
                continue;
            }
            if jumped {
                t += local;
            } else {
                flow.advance(&mut state, h_try - local, rng, &mut run);
                t = if h_try == h && stop - t <= h { stop } else { t + h_try };
                if let Some(obs) = observer.as_mut() {
                    obs(PdmpEvent::Flow { time: t, state: &state });
                }
            }
            break;
        }
    }
    Ok(run)
}
