//! The voter model, which is the infinite-rate process at `rho = -1`.
//!
//! Site `k` adopts the opinion of `j` at rate `a(k, j)`, so it flips at rate
//! `sum_{j != k} a(k, j) 1{eta(j) != eta(k)}`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::duals::coalescing_dual_estimate;
use crate::error::{Error, Result};
use crate::exitlaw::ExitLawParams;
use crate::lattice::SiteGraph;
use crate::rng::stream;
use crate::sbm_finite::PairField;
use crate::sbm_infinite::{intensity, pdmp_simulate, JumpLaw, PdmpConfig, PdmpEvent, Trotter};
use crate::stats::MeanVar;

/// Opinions in `{0, 1}` per site; `1` corresponds to the `U` type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpinionField(Vec<u8>);

impl OpinionField {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(k) = values.iter().position(|&x| x > 1) {
            return Err(Error::param("opinions", format!("site {k} has value {}, need 0 or 1", values[k])));
        }
        Ok(OpinionField(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> u8 {
        self.0[k]
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    /// The pair `(1{eta = 1}, 1{eta = 0})`, a state on `E` with unit magnitudes.
    pub fn to_pair(&self) -> PairField {
        PairField {
            u: self.0.iter().map(|&x| x as f64).collect(),
            v: self.0.iter().map(|&x| (1 - x) as f64).collect(),
        }
    }

    /// Inverse of [`to_pair`](Self::to_pair); fails unless every site is a unit vector.
    pub fn from_pair(state: &PairField) -> Result<Self> {
        (0..state.len())
            .map(|k| match (state.u[k], state.v[k]) {
                (u, v) if u == 1.0 && v == 0.0 => Ok(1),
                (u, v) if u == 0.0 && v == 1.0 => Ok(0),
                (u, v) => Err(Error::OffBoundary { site: k, u, v }),
            })
            .collect::<Result<Vec<u8>>>()
            .map(OpinionField)
    }
}

/// Flip rate of site `k`. Sums the disagreeing neighbours in index order.
pub fn flip_rate(graph: &SiteGraph<f64>, eta: &OpinionField, k: usize) -> f64 {
    let mut s = 0.0;
    for &(j, a) in graph.neighbours(k) {
        if eta.0[j] != eta.0[k] {
            s += a;
        }
    }
    s
}

/// Exact simulation; returns the configuration at each sample time.
pub fn gillespie_simulate<R: Rng + ?Sized>(
    graph: &SiteGraph<f64>,
    initial: &OpinionField,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<Vec<OpinionField>> {
    graph.check_len(initial.len())?;
    let mut times = sample_times.to_vec();
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::param("times", "sample times must be nonnegative"));
    }
    times.sort_by(f64::total_cmp);
    let n = graph.n_sites();
    let mut eta = initial.clone();
    let mut rates: Vec<f64> = (0..n).map(|k| flip_rate(graph, &eta, k)).collect();
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut next = 0;
    while next < times.len() {
        let total: f64 = rates.iter().sum();
        let dt = if total > 0.0 { rng.sample::<f64, _>(Exp1) / total } else { f64::INFINITY };
        while next < times.len() && times[next] < now + dt {
            out.push(eta.clone());
            next += 1;
        }
        if next == times.len() {
            break;
        }
        now += dt;
        let mut x = rng.random::<f64>() * total;
        let mut k = n - 1;
        for (i, &r) in rates.iter().enumerate() {
            if x < r {
                k = i;
                break;
            }
            x -= r;
        }
        eta.0[k] ^= 1;
        rates[k] = flip_rate(graph, &eta, k);
        for &(j, _) in graph.neighbours(k) {
            rates[j] = flip_rate(graph, &eta, j);
        }
    }
    Ok(out)
}

/// Mean and standard error of an observable.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Moment {
    pub mean: f64,
    pub se: f64,
}

impl From<MeanVar> for Moment {
    fn from(m: MeanVar) -> Self {
        Moment { mean: m.mean, se: m.se() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimatorMoments {
    pub name: String,
    pub one_point: Vec<Moment>,
    pub two_point: Vec<Moment>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub t: f64,
    pub one_point_sites: Vec<usize>,
    pub two_point_pairs: Vec<(usize, usize)>,
    pub estimators: Vec<EstimatorMoments>,
    /// Coalescing-walk dual for the one-point functions.
    pub dual_one_point: Vec<Moment>,
    /// Largest `|gap| / combined SE` over all estimator pairs and observables.
    pub max_z: f64,
    /// Every state visited by the `rho = -1` jump process had unit magnitudes.
    pub magnitudes_preserved: bool,
    /// On every sampled state, `I(k) nu(E)` equalled the voter flip rate.
    pub rates_match: bool,
}

#[derive(Clone, Debug)]
pub struct VoterComparison {
    pub t: f64,
    pub one_point: Vec<usize>,
    pub two_point: Vec<(usize, usize)>,
    pub replicas: u64,
    pub trotter_eps: f64,
    pub seed: u64,
}

/// Compares the voter model against the `rho = -1` Trotter and jump-process
/// constructions on one- and two-point functions of `1{eta = 1}`.
pub fn voter_vs_sbminf(graph: &SiteGraph<f64>, initial: &OpinionField, cmp: &VoterComparison) -> Result<ComparisonReport> {
    graph.check_len(initial.len())?;
    let n_obs = cmp.one_point.len();
    let observe = |u: &[f64], one: &mut [MeanVar], two: &mut [MeanVar]| {
        for (m, &k) in one.iter_mut().zip(&cmp.one_point) {
            m.push(u[k]);
        }
        for (m, &(a, b)) in two.iter_mut().zip(&cmp.two_point) {
            m.push(u[a] * u[b]);
        }
    };
    let fresh = || (vec![MeanVar::default(); n_obs], vec![MeanVar::default(); cmp.two_point.len()]);

    let (mut v1, mut v2) = fresh();
    for r in 0..cmp.replicas {
        let mut rng = stream(cmp.seed, "voter", r);
        let end = gillespie_simulate(graph, initial, &[cmp.t], &mut rng)?;
        observe(&end[0].to_pair().u, &mut v1, &mut v2);
    }

    let params = ExitLawParams::new(-1.0)?;
    let mut trotter = Trotter::new(graph, params, cmp.trotter_eps)?;
    let (mut t1, mut t2) = fresh();
    let start = initial.to_pair();
    for r in 0..cmp.replicas {
        let mut rng = stream(cmp.seed, "voter-trotter", r);
        let mut s = start.clone();
        for _ in 0..trotter.n_steps(cmp.t) {
            trotter.step(&mut s, &mut rng);
        }
        observe(&s.u, &mut t1, &mut t2);
    }

    let (mut p1, mut p2) = fresh();
    let mut magnitudes_preserved = true;
    let mut rates_match = true;
    let law = JumpLaw::OpinionSwap;
    for r in 0..cmp.replicas {
        let mut rng = stream(cmp.seed, "voter-pdmp", r);
        let mut check = |ev: PdmpEvent<'_>| {
            let s = match ev {
                PdmpEvent::Flow { state, .. } | PdmpEvent::Jump { state, .. } => state,
            };
            if (0..s.len()).any(|k| s.u[k] + s.v[k] != 1.0 || s.u[k] * s.v[k] != 0.0) {
                magnitudes_preserved = false;
                return;
            }
            if let Ok(eta) = OpinionField::from_pair(s) {
                for k in 0..s.len() {
                    let i = intensity(graph, s, k).unwrap_or(f64::NAN) * law.total_mass();
                    if i != flip_rate(graph, &eta, k) {
                        rates_match = false;
                    }
                }
            }
        };
        let run = pdmp_simulate(graph, &law, cmp.t, &start, &[cmp.t], &PdmpConfig::default(), &mut rng, Some(&mut check))?;
        observe(&run.trajectory.states[0].u, &mut p1, &mut p2);
    }

    let mut dual_one_point = Vec::with_capacity(n_obs);
    for &k in &cmp.one_point {
        let est = coalescing_dual_estimate(graph, initial, &[k], cmp.t, cmp.replicas, cmp.seed)?;
        dual_one_point.push(Moment { mean: est.mean, se: est.se });
    }

    let pack = |name: &str, one: Vec<MeanVar>, two: Vec<MeanVar>| EstimatorMoments {
        name: name.to_string(),
        one_point: one.into_iter().map(Moment::from).collect(),
        two_point: two.into_iter().map(Moment::from).collect(),
    };
    let estimators = vec![pack("voter", v1, v2), pack("trotter", t1, t2), pack("pdmp", p1, p2)];
    let mut max_z: f64 = 0.0;
    for a in 0..estimators.len() {
        for b in a + 1..estimators.len() {
            let pairs = estimators[a]
                .one_point
                .iter()
                .zip(&estimators[b].one_point)
                .chain(estimators[a].two_point.iter().zip(&estimators[b].two_point));
            for (x, y) in pairs {
                let se = x.se.hypot(y.se);
                let gap = (x.mean - y.mean).abs();
                let z = if se > 0.0 { gap / se } else if gap == 0.0 { 0.0 } else { f64::INFINITY };
                max_z = max_z.max(z);
            }
        }
    }
    Ok(ComparisonReport {
        t: cmp.t,
        one_point_sites: cmp.one_point.clone(),
        two_point_pairs: cmp.two_point.clone(),
        estimators,
        dual_one_point,
        max_z,
        magnitudes_preserved,
        rates_match,
    })
}
