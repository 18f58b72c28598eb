//! Coalescing random walks, dual to the voter model:
//! `E[prod_i eta_t(a_i)] = E[prod_{surviving walkers} eta_0(xi_t)]`.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::SiteGraph;
use crate::rng::stream;
use crate::stats::MeanVar;
use crate::voter::OpinionField;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoalescingEstimate {
    pub mean: f64,
    pub se: f64,
    pub replicas: u64,
}

fn coalescing_replica<R: Rng + ?Sized>(graph: &SiteGraph<f64>, sites: &[usize], t: f64, rng: &mut R) -> Vec<usize> {
    let mut walkers: Vec<usize> = sites.to_vec();
    walkers.sort_unstable();
    walkers.dedup();
    let mut now = 0.0;
    loop {
        let total: f64 = walkers.iter().map(|&s| graph.jump_rate(s)).sum();
        if total <= 0.0 {
            break;
        }
        now += rng.sample::<f64, _>(Exp1) / total;
        if now >= t {
            break;
        }
        let mut x = rng.random::<f64>() * total;
        let mut who = walkers.len() - 1;
        for (i, &s) in walkers.iter().enumerate() {
            let r = graph.jump_rate(s);
            if x < r {
                who = i;
                break;
            }
            x -= r;
        }
        let from = walkers[who];
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
        if walkers.contains(&to) {
            walkers.swap_remove(who);
        } else {
            walkers[who] = to;
        }
    }
    walkers
}

/// Estimates `E[prod_{k in sites} eta_t(k)]` for the voter model started at `initial`.
pub fn coalescing_dual_estimate(
    graph: &SiteGraph<f64>,
    initial: &OpinionField,
    sites: &[usize],
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<CoalescingEstimate> {
    graph.check_len(initial.len())?;
    if let Some(&k) = sites.iter().find(|&&k| k >= graph.n_sites()) {
        return Err(Error::param("sites", format!("site {k} out of range")));
    }
    let mut acc = MeanVar::default();
    for r in 0..replicas {
        let mut rng = stream(seed, "coalescing-dual", r);
        let end = coalescing_replica(graph, sites, t, &mut rng);
        acc.push(if end.iter().all(|&s| initial.get(s) == 1) { 1.0 } else { 0.0 });
    }
    Ok(CoalescingEstimate { mean: acc.mean, se: acc.se(), replicas })
}
