//! Moment dual: particles walk with the graph's generator and carry one of two
//! colours. A co-located pair of the same colour flips one of its members at
//! rate `gamma`; the Feynman-Kac weight is `exp(gamma (L_same + rho L_diff))`
//! where `L` are the collision local times of same- and different-colour
//! pairs.
//!
//! `E[prod_i u_t(a_i) prod_j v_t(b_j)] = E[weight prod_{colour 1} u_0 prod_{colour 2} v_0]`.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::SiteGraph;
use crate::rng::{stream, SimRng};
use crate::sbm_finite::PairField;
use crate::stats::MeanVar;

/// Which mixed moment to estimate.
#[derive(Clone, Debug)]
pub struct MomentDualSpec {
    pub gamma: f64,
    pub rho: f64,
    pub t: f64,
    /// Sites carrying a `u` factor.
    pub u_sites: Vec<usize>,
    /// Sites carrying a `v` factor.
    pub v_sites: Vec<usize>,
    /// Run even when the weights are expected to be too heavy-tailed.
    pub force: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualEstimate {
    pub mean: f64,
    pub se: f64,
    pub replicas: u64,
    /// Relative standard error above 0.5.
    pub unreliable: bool,
}

#[derive(Clone, Copy)]
struct Particle {
    site: usize,
    colour: u8,
}

/// One replica: the weighted terminal functional.
pub fn moment_dual_replica<R: Rng + ?Sized>(
    graph: &SiteGraph<f64>,
    spec: &MomentDualSpec,
    initial: &PairField,
    rng: &mut R,
) -> f64 {
    let mut ps: Vec<Particle> = spec
        .u_sites
        .iter()
        .map(|&s| Particle { site: s, colour: 0 })
        .chain(spec.v_sites.iter().map(|&s| Particle { site: s, colour: 1 }))
        .collect();
    let m = ps.len();
    let idx = |i: usize, j: usize| i * m + j;
    let draw = |rng: &mut R| {
        if spec.gamma > 0.0 {
            rng.sample::<f64, _>(Exp1) / spec.gamma
        } else {
            f64::INFINITY
        }
    };
    // Per pair (i < j): accumulated same-colour collision time and its threshold.
    let mut acc = vec![0.0; m * m];
    let mut thr = vec![f64::INFINITY; m * m];
    for i in 0..m {
        for j in i + 1..m {
            thr[idx(i, j)] = draw(rng);
        }
    }
    let mut l_same = 0.0;
    let mut l_diff = 0.0;
    let mut now = 0.0;
    loop {
        let walk_total: f64 = ps.iter().map(|p| graph.jump_rate(p.site)).sum();
        let dt_walk = if walk_total > 0.0 { rng.sample::<f64, _>(Exp1) / walk_total } else { f64::INFINITY };
        let mut dt_flip = f64::INFINITY;
        let mut flip_pair = (0, 0);
        let mut n_same = 0usize;
        let mut n_diff = 0usize;
        for i in 0..m {
            for j in i + 1..m {
                if ps[i].site != ps[j].site {
                    continue;
                }
                if ps[i].colour == ps[j].colour {
                    n_same += 1;
                    let left = thr[idx(i, j)] - acc[idx(i, j)];
                    if left < dt_flip {
                        dt_flip = left;
                        flip_pair = (i, j);
                    }
                } else {
                    n_diff += 1;
                }
            }
        }
        let dt = dt_walk.min(dt_flip).min(spec.t - now);
        l_same += dt * n_same as f64;
        l_diff += dt * n_diff as f64;
        for i in 0..m {
            for j in i + 1..m {
                if ps[i].site == ps[j].site && ps[i].colour == ps[j].colour {
                    acc[idx(i, j)] += dt;
                }
            }
        }
        now += dt;
        if now >= spec.t {
            break;
        }
        if dt_flip <= dt_walk {
            let (a, b) = flip_pair;
            let who = if rng.random::<bool>() { a } else { b };
            ps[who].colour ^= 1;
            for o in 0..m {
                if o != who {
                    let (i, j) = if o < who { (o, who) } else { (who, o) };
                    acc[idx(i, j)] = 0.0;
                    thr[idx(i, j)] = draw(rng);
                }
            }
        } else {
            let mut x = rng.random::<f64>() * walk_total;
            let mut who = m - 1;
            for (i, p) in ps.iter().enumerate() {
                let r = graph.jump_rate(p.site);
                if x < r {
                    who = i;
                    break;
                }
                x -= r;
            }
            let from = ps[who].site;
            let nb = graph.neighbours(from);
            let mut y = rng.random::<f64>() * graph.jump_rate(from);
            let mut to = nb[nb.len() - 1].0;
            for &(j, a) in nb {
                if y < a {
                    to = j;
                    break;
                }
                y -= a;
            }
            ps[who].site = to;
        }
    }
    let mut value = (spec.gamma * (l_same + spec.rho * l_diff)).exp();
    for p in &ps {
        value *= if p.colour == 0 { initial.u[p.site] } else { initial.v[p.site] };
    }
    value
}

/// Monte Carlo estimate over `replicas` independent dual paths.
///
/// Refuses when `gamma t (number of pairs) > 10` unless `spec.force` is set:
/// the Feynman-Kac weights are then too heavy-tailed for a usable estimate.
pub fn moment_dual_estimate(
    graph: &SiteGraph<f64>,
    spec: &MomentDualSpec,
    initial: &PairField,
    replicas: u64,
    seed: u64,
) -> Result<DualEstimate> {
    graph.check_len(initial.len())?;
    if let Some(&k) = spec.u_sites.iter().chain(&spec.v_sites).find(|&&k| k >= graph.n_sites()) {
        return Err(Error::param("sites", format!("site {k} out of range")));
    }
    if !(spec.gamma >= 0.0 && spec.t >= 0.0 && spec.rho >= -1.0 && spec.rho <= 1.0) {
        return Err(Error::param("spec", "need gamma >= 0, t >= 0, rho in [-1, 1]"));
    }
    let m = spec.u_sites.len() + spec.v_sites.len();
    let pairs = (m * m.saturating_sub(1) / 2) as f64;
    if spec.gamma * spec.t * pairs > 10.0 && !spec.force {
        return Err(Error::Refused(format!(
            "gamma t pairs = {} > 10; dual weights would dominate the estimate (set force to override)",
            spec.gamma * spec.t * pairs
        )));
    }
    let mut acc = MeanVar::default();
    for r in 0..replicas {
        let mut rng: SimRng = stream(seed, "moment-dual", r);
        acc.push(moment_dual_replica(graph, spec, initial, &mut rng));
    }
    let se = acc.se();
    Ok(DualEstimate { mean: acc.mean, se, replicas, unreliable: !(se <= 0.5 * acc.mean.abs()) })
}
