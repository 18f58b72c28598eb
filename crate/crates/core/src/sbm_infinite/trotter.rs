use rand::Rng;

use super::{check_on_boundary, sorted_times, BoundaryTrajectory, Path, PathSegment};
use crate::error::{Error, Result};
use crate::exitlaw::{sample_exit, ExitLawParams};
use crate::lattice::{HeatKernel, SiteGraph};
use crate::sbm_finite::PairField;

/// Trotter scheme with a cached heat kernel `P_eps`.
///
/// One step applies `P_eps` to both fields and then replaces every site by an
/// independent draw of the exit law started at the smoothed values.
#[derive(Clone)]
pub struct Trotter<'g> {
    graph: &'g SiteGraph<f64>,
    params: ExitLawParams<f64>,
    eps: f64,
    kernel: HeatKernel<f64>,
    su: Vec<f64>,
    sv: Vec<f64>,
}

impl<'g> Trotter<'g> {
    pub fn new(graph: &'g SiteGraph<f64>, params: ExitLawParams<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::param("eps", format!("{eps} must be positive")));
        }
        let kernel = graph.heat_semigroup(eps)?;
        let n = graph.n_sites();
        Ok(Trotter { graph, params, eps, kernel, su: vec![0.0; n], sv: vec![0.0; n] })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn graph(&self) -> &SiteGraph<f64> {
        self.graph
    }

    pub fn kernel(&self) -> &HeatKernel<f64> {
        &self.kernel
    }

    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut PairField, rng: &mut R) {
        self.kernel.apply_into(&state.u, &mut self.su);
        self.kernel.apply_into(&state.v, &mut self.sv);
        for k in 0..state.len() {
            let b = sample_exit(&self.params, (self.su[k], self.sv[k]), rng);
            let (u, v) = b.to_pair();
            state.u[k] = u;
            state.v[k] = v;
        }
    }

    /// Kernels `P_(j eps / m)` for `j = 0..=m`, used to sample the heat flow
    /// inside a step.
    pub fn sub_kernels(&self, m: usize) -> Result<Vec<HeatKernel<f64>>> {
        if m == 0 {
            return Err(Error::param("substeps", "need at least one"));
        }
        (0..=m).map(|j| self.graph.heat_semigroup(self.eps * j as f64 / m as f64)).collect()
    }

    /// Runs to `horizon` and keeps the continuous heat-flow stretches on the
    /// grid given by `kernels` (from [`sub_kernels`](Self::sub_kernels)).
    pub fn sample_path<R: Rng + ?Sized>(
        &mut self,
        horizon: f64,
        initial: &PairField,
        kernels: &[HeatKernel<f64>],
        rng: &mut R,
    ) -> Result<Path> {
        self.graph.check_len(initial.len())?;
        check_on_boundary(initial)?;
        let m = kernels.len().saturating_sub(1).max(1);
        let mut state = initial.clone();
        let mut segments = Vec::new();
        for _ in 0..self.n_steps(horizon) {
            let states = kernels
                .iter()
                .map(|p| {
                    let mut s = state.clone();
                    p.apply_into(&state.u, &mut s.u);
                    p.apply_into(&state.v, &mut s.v);
                    s
                })
                .collect();
            segments.push(PathSegment { dt: self.eps / m as f64, states });
            self.step(&mut state, rng);
        }
        Ok(Path { initial: initial.clone(), segments, terminal: state })
    }

    /// Number of steps to reach `horizon`.
    pub fn n_steps(&self, horizon: f64) -> usize {
        (horizon / self.eps - 1e-9).ceil().max(0.0) as usize
    }
}

/// One Trotter step from `state`.
pub fn trotter_step<R: Rng + ?Sized>(
    state: &PairField,
    graph: &SiteGraph<f64>,
    params: &ExitLawParams<f64>,
    eps: f64,
    rng: &mut R,
) -> Result<PairField> {
    graph.check_len(state.len())?;
    let mut t = Trotter::new(graph, *params, eps)?;
    let mut next = state.clone();
    t.step(&mut next, rng);
    Ok(next)
}

/// Runs `ceil(horizon / eps)` steps and records the state at the first step
/// boundary at or after each sample time.
pub fn trotter_simulate<R: Rng + ?Sized>(
    scheme: &mut Trotter<'_>,
    horizon: f64,
    initial: &PairField,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<BoundaryTrajectory> {
    scheme.graph.check_len(initial.len())?;
    check_on_boundary(initial)?;
    let times = sorted_times(sample_times, horizon)?;
    let mut out = BoundaryTrajectory::default();
    let mut state = initial.clone();
    let mut next = 0;
    let steps = scheme.n_steps(horizon);
    for i in 0..=steps {
        let t = i as f64 * scheme.eps;
        while next < times.len() && (times[next] <= t + 1e-12 || i == steps) {
            out.times.push(times[next]);
            out.states.push(state.clone());
            next += 1;
        }
        if i < steps {
            scheme.step(&mut state, rng);
        }
    }
    Ok(out)
}
