//! Single runs behind the module subcommands of the command-line tool.
//!
//! Each run has a flat config block (same file rules as experiments) and
//! produces a [`SummaryReport`] without pass/fail checks plus CSV tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Checker, GraphSpec, PairSpec};
use super::experiments::exit_mass;
use super::report::{fmt, ExperimentOutput, SummaryReport, Table};
use crate::duals::{coalescing_dual_estimate, moment_dual_estimate, selfdual_check, MomentDualSpec};
use crate::error::Result;
use crate::exitlaw::{exit_density, sample_exit, Axis, ExitLawParams, TruncatedJumpMeasure};
use crate::lattice::SiteGraph;
use crate::rng::stream;
use crate::sbm_finite::{simulate, PairField, RunOptions, Scheme, SdeConfig};
use crate::sbm_infinite::{pdmp_simulate, trotter_simulate, JumpLaw, PdmpConfig, Trotter};
use crate::stats::{hill_exponent, hill_k, ks_subdistribution, MeanVar};
use crate::voter::{gillespie_simulate, voter_vs_sbminf, OpinionField, VoterComparison};

fn report(name: &str, seed: u64, cfg: &impl Serialize) -> SummaryReport {
    SummaryReport::new(name, seed, serde_json::to_value(cfg).unwrap_or_default())
}

fn build_graph(c: &mut Checker, g: &GraphSpec) -> Option<SiteGraph<f64>> {
    c.graph("graph", g)
}

fn initial_or(c: &mut Checker, key: &str, spec: &Option<PairSpec>, n: usize, fallback: impl Fn(usize) -> (f64, f64), on_e: bool) -> PairSpec {
    match spec {
        Some(p) => {
            c.pair(key, p, Some(n), on_e);
            p.clone()
        }
        None => {
            let (u, v): (Vec<f64>, Vec<f64>) = (0..n).map(fallback).unzip();
            PairSpec { u, v }
        }
    }
}

fn sample_table() -> Table {
    Table::new("samples", &["replica", "time", "site", "u", "v"])
}

fn push_state(table: &mut Table, replica: u64, time: f64, probes: &[usize], s: &PairField) {
    for &k in probes {
        table.row(vec![replica.to_string(), fmt(time), k.to_string(), fmt(s.u[k]), fmt(s.v[k])]);
    }
}

/// `sbm run`: finite-rate SDE replicas.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub rho: f64,
    /// Defaults to `1e-3 min(1, 1/gamma)`.
    pub dt: Option<f64>,
    pub horizon: f64,
    pub replicas: u64,
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    pub scheme: Scheme,
    /// Defaults to `u = v = 1` everywhere.
    pub initial: Option<PairSpec>,
}

impl Default for SbmRunConfig {
    fn default() -> Self {
        SbmRunConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            gamma: 1.0,
            rho: 0.0,
            dt: None,
            horizon: 1.0,
            replicas: 100,
            probes: vec![0],
            times: vec![0.5, 1.0],
            scheme: Scheme::Euler,
            initial: None,
        }
    }
}

pub fn sbm_run(cfg: &SbmRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let init = initial_or(&mut c, "initial", &cfg.initial, n, |_| (1.0, 1.0), false);
    c.count("replicas", cfg.replicas);
    c.sites("probes", &cfg.probes, Some(n));
    let mut sde = SdeConfig { gamma: cfg.gamma, rho: cfg.rho, dt: 1e-3, horizon: cfg.horizon, scheme: cfg.scheme };
    sde.dt = cfg.dt.unwrap_or(1e-3 * (1.0f64).min(1.0 / cfg.gamma));
    if let Err(e) = sde.validate() {
        c.require(false, "<root>", e.to_string());
    }
    c.finish()?;
    let graph = graph.expect("validated");
    let initial = init.build()?;
    let mut rep = report("sbm-run", cfg.seed, cfg);
    rep.warnings = sde.warnings();
    let opts = RunOptions { probes: cfg.probes.clone(), times: cfg.times.clone(), ..Default::default() };
    let runs = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, "sbm-run", i);
            simulate(&graph, &sde, &initial, &opts, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = sample_table();
    let (mut mu, mut mv, mut cross, mut quad_u, mut quad_v) =
        (MeanVar::default(), MeanVar::default(), MeanVar::default(), MeanVar::default(), MeanVar::default());
    let mut clamps = 0;
    for (i, r) in runs.iter().enumerate() {
        for rec in &r.records {
            table.row(vec![i.to_string(), fmt(rec.time), rec.site.to_string(), fmt(rec.u), fmt(rec.v)]);
        }
        mu.push(r.observables.total_u);
        mv.push(r.observables.total_v);
        cross.push(r.observables.brackets.cross);
        quad_u.push(r.observables.brackets.quad_u);
        quad_v.push(r.observables.brackets.quad_v);
        clamps += r.clamps;
    }
    rep.metric("total_u_mean", mu.mean);
    rep.metric("total_u_se", mu.se());
    rep.metric("total_v_mean", mv.mean);
    rep.metric("total_v_se", mv.se());
    rep.metric("bracket_ratio", cross.mean / (quad_u.mean * quad_v.mean).sqrt());
    rep.metric("clamps", clamps);
    Ok(ExperimentOutput { report: rep, tables: vec![table] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Trotter,
    Pdmp,
}

/// `sbminf run`: infinite-rate process replicas.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbminfRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub rho: f64,
    pub horizon: f64,
    pub replicas: u64,
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    pub method: Method,
    pub eps: f64,
    pub trunc_eps: f64,
    pub flow_substep: f64,
    /// Defaults to alternating `(1, 0)` and `(0, 1)`.
    pub initial: Option<PairSpec>,
}

impl Default for SbminfRunConfig {
    fn default() -> Self {
        SbminfRunConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            rho: 0.0,
            horizon: 1.0,
            replicas: 100,
            probes: vec![0],
            times: vec![0.5, 1.0],
            method: Method::Trotter,
            eps: 0.01,
            trunc_eps: 0.1,
            flow_substep: 0.01,
            initial: None,
        }
    }
}

pub fn sbminf_run(cfg: &SbminfRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let alt = |k: usize| if k.is_multiple_of(2) { (1.0, 0.0) } else { (0.0, 1.0) };
    let init = initial_or(&mut c, "initial", &cfg.initial, n, alt, true);
    c.rho("rho", cfg.rho, cfg.method == Method::Pdmp && cfg.rho != -1.0);
    c.positive("horizon", cfg.horizon);
    c.count("replicas", cfg.replicas);
    c.sites("probes", &cfg.probes, Some(n));
    c.positive("eps", cfg.eps);
    c.require(cfg.trunc_eps > 0.0 && cfg.trunc_eps < 1.0, "trunc_eps", "must lie in (0, 1)");
    c.positive("flow_substep", cfg.flow_substep);
    for (i, &t) in cfg.times.iter().enumerate() {
        c.require(t >= 0.0 && t <= cfg.horizon, format!("times[{i}]"), "must lie in [0, horizon]");
    }
    c.finish()?;
    let graph = graph.expect("validated");
    let initial = init.build()?;
    let params = ExitLawParams::new(cfg.rho)?;
    let mut rep = report("sbminf-run", cfg.seed, cfg);
    let mut table = sample_table();
    let mut diag = Table::new("replicas", &["replica", "jumps", "zeroed_mass", "halvings"]);
    match cfg.method {
        Method::Trotter => {
            let scheme = Trotter::new(&graph, params, cfg.eps)?;
            let trajs = (0..cfg.replicas)
                .into_par_iter()
                .map_init(
                    || scheme.clone(),
                    |tr, i| {
                        let mut rng = stream(cfg.seed, "sbminf-run/trotter", i);
                        trotter_simulate(tr, cfg.horizon, &initial, &cfg.times, &mut rng)
                    },
                )
                .collect::<Result<Vec<_>>>()?;
            for (i, tj) in trajs.iter().enumerate() {
                for (t, s) in tj.times.iter().zip(&tj.states) {
                    push_state(&mut table, i as u64, *t, &cfg.probes, s);
                }
            }
        }
        Method::Pdmp => {
            let law = if cfg.rho == -1.0 {
                JumpLaw::OpinionSwap
            } else {
                JumpLaw::Truncated(TruncatedJumpMeasure::new(cfg.rho, cfg.trunc_eps)?)
            };
            let pc = PdmpConfig { max_substep: cfg.flow_substep, ..Default::default() };
            let runs = (0..cfg.replicas)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(cfg.seed, "sbminf-run/pdmp", i);
                    pdmp_simulate(&graph, &law, cfg.horizon, &initial, &cfg.times, &pc, &mut rng, None)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut jumps = MeanVar::default();
            for (i, r) in runs.iter().enumerate() {
                for (t, s) in r.trajectory.times.iter().zip(&r.trajectory.states) {
                    push_state(&mut table, i as u64, *t, &cfg.probes, s);
                }
                diag.row(vec![i.to_string(), r.jumps.to_string(), fmt(r.zeroed_mass), r.halvings.to_string()]);
                jumps.push(r.jumps as f64);
            }
            rep.metric("jumps_per_replica", jumps.mean);
            rep.metric("jump_mass", law.total_mass());
        }
    }
    let mut tables = vec![table];
    if !diag.rows.is_empty() {
        tables.push(diag);
    }
    Ok(ExperimentOutput { report: rep, tables })
}

/// `dual moment`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub rho: f64,
    pub t: f64,
    pub u_sites: Vec<usize>,
    pub v_sites: Vec<usize>,
    pub initial: Option<PairSpec>,
    pub replicas: u64,
    pub force: bool,
}

impl Default for MomentRunConfig {
    fn default() -> Self {
        MomentRunConfig {
            seed: 42,
            graph: GraphSpec::Dumbbell { rate: 1.0 },
            gamma: 1.0,
            rho: 0.0,
            t: 0.5,
            u_sites: vec![0],
            v_sites: vec![1],
            initial: None,
            replicas: 10_000,
            force: false,
        }
    }
}

pub fn dual_moment(cfg: &MomentRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let init = initial_or(&mut c, "initial", &cfg.initial, n, |_| (1.0, 1.0), false);
    c.sites("u_sites", &cfg.u_sites, Some(n));
    c.sites("v_sites", &cfg.v_sites, Some(n));
    c.count("replicas", cfg.replicas);
    c.finish()?;
    let spec = MomentDualSpec {
        gamma: cfg.gamma,
        rho: cfg.rho,
        t: cfg.t,
        u_sites: cfg.u_sites.clone(),
        v_sites: cfg.v_sites.clone(),
        force: cfg.force,
    };
    let est = moment_dual_estimate(&graph.expect("validated"), &spec, &init.build()?, cfg.replicas, cfg.seed)?;
    let mut rep = report("dual-moment", cfg.seed, cfg);
    rep.metric("estimate", est.mean);
    rep.metric("se", est.se);
    rep.metric("replicas", est.replicas);
    rep.metric("unreliable", est.unreliable);
    Ok(ExperimentOutput { report: rep, tables: Vec::new() })
}

/// `dual coalesce`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoalesceRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    /// Opinions in `{0, 1}`; defaults to ones on the first half of the sites.
    pub initial: Option<Vec<u8>>,
    pub sites: Vec<usize>,
    pub t: f64,
    pub replicas: u64,
}

impl Default for CoalesceRunConfig {
    fn default() -> Self {
        CoalesceRunConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            initial: None,
            sites: vec![3, 4],
            t: 1.0,
            replicas: 10_000,
        }
    }
}

fn opinions(c: &mut Checker, spec: &Option<Vec<u8>>, n: usize) -> Vec<u8> {
    match spec {
        Some(v) => {
            c.require(v.len() == n, "initial", format!("has {} sites, graph has {n}", v.len()));
            c.require(v.iter().all(|&x| x <= 1), "initial", "opinions must be 0 or 1");
            v.clone()
        }
        None => (0..n).map(|k| u8::from(k < n / 2)).collect(),
    }
}

pub fn dual_coalesce(cfg: &CoalesceRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let eta = opinions(&mut c, &cfg.initial, n);
    c.sites("sites", &cfg.sites, Some(n));
    c.nonnegative("t", cfg.t);
    c.count("replicas", cfg.replicas);
    c.finish()?;
    let est = coalescing_dual_estimate(&graph.expect("validated"), &OpinionField::new(eta)?, &cfg.sites, cfg.t, cfg.replicas, cfg.seed)?;
    let mut rep = report("dual-coalesce", cfg.seed, cfg);
    rep.metric("estimate", est.mean);
    rep.metric("se", est.se);
    rep.metric("replicas", est.replicas);
    Ok(ExperimentOutput { report: rep, tables: Vec::new() })
}

/// `dual selfdual`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfdualRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub rho: f64,
    pub t: f64,
    pub dt: f64,
    pub x0: Option<PairSpec>,
    pub y0: Option<PairSpec>,
    pub replicas: u64,
}

impl Default for SelfdualRunConfig {
    fn default() -> Self {
        SelfdualRunConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 4 },
            gamma: 1.0,
            rho: 0.0,
            t: 0.5,
            dt: 1e-3,
            x0: None,
            y0: None,
            replicas: 2_000,
        }
    }
}

pub fn dual_selfdual(cfg: &SelfdualRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let x0 = initial_or(&mut c, "x0", &cfg.x0, n, |_| (1.0, 0.5), false);
    let y0 = initial_or(&mut c, "y0", &cfg.y0, n, |k| if k == 0 { (0.5, 0.0) } else { (0.0, 0.0) }, false);
    c.count("replicas", cfg.replicas);
    let sde = SdeConfig { gamma: cfg.gamma, rho: cfg.rho, dt: cfg.dt, horizon: cfg.t, scheme: Scheme::Euler };
    if let Err(e) = sde.validate() {
        c.require(false, "<root>", e.to_string());
    }
    c.finish()?;
    let graph = graph.expect("validated");
    let (x0, y0) = (x0.build()?, y0.build()?);
    let run = |start: &PairField, tag: &str| -> Result<Vec<PairField>> {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(cfg.seed, tag, i);
                simulate(&graph, &sde, start, &RunOptions::default(), &mut rng).map(|r| r.final_state)
            })
            .collect()
    };
    let gap = selfdual_check(&run(&x0, "dual-selfdual/forward")?, &run(&y0, "dual-selfdual/backward")?, &x0, &y0, cfg.rho)?;
    let mut rep = report("dual-selfdual", cfg.seed, cfg);
    rep.metric("gap", gap);
    rep.metric("replicas", cfg.replicas);
    Ok(ExperimentOutput { report: rep, tables: Vec::new() })
}

/// `voter run`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoterRunConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub initial: Option<Vec<u8>>,
    pub times: Vec<f64>,
    pub replicas: u64,
}

impl Default for VoterRunConfig {
    fn default() -> Self {
        VoterRunConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            initial: None,
            times: vec![0.5, 1.0],
            replicas: 100,
        }
    }
}

pub fn voter_run(cfg: &VoterRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let eta = opinions(&mut c, &cfg.initial, n);
    c.count("replicas", cfg.replicas);
    for (i, &t) in cfg.times.iter().enumerate() {
        c.nonnegative(&format!("times[{i}]"), t);
    }
    c.finish()?;
    let graph = graph.expect("validated");
    let eta = OpinionField::new(eta)?;
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    let runs = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, "voter-run", i);
            gillespie_simulate(&graph, &eta, &times, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("samples", &["replica", "time", "site", "eta"]);
    let mut density = vec![MeanVar::default(); times.len()];
    for (i, run) in runs.iter().enumerate() {
        for ((t, field), d) in times.iter().zip(run).zip(density.iter_mut()) {
            for (k, &x) in field.values().iter().enumerate() {
                table.row(vec![i.to_string(), fmt(*t), k.to_string(), x.to_string()]);
            }
            d.push(field.values().iter().map(|&x| x as f64).sum::<f64>() / n as f64);
        }
    }
    let mut rep = report("voter-run", cfg.seed, cfg);
    rep.metric("density_mean", density.iter().map(|d| d.mean).collect::<Vec<_>>());
    rep.metric("density_se", density.iter().map(|d| d.se()).collect::<Vec<_>>());
    Ok(ExperimentOutput { report: rep, tables: vec![table] })
}

/// `voter compare`.
///
/// Setting `experimental` together with `initial_pair` compares the Trotter
/// and jump-process constructions at `rho = -1` from general data on `E`,
/// where no voter model is available.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoterCompareConfig {
    pub seed: u64,
    pub graph: GraphSpec,
    pub initial: Option<Vec<u8>>,
    pub t: f64,
    pub one_point: Vec<usize>,
    pub two_point: Vec<(usize, usize)>,
    pub replicas: u64,
    pub trotter_eps: f64,
    pub experimental: bool,
    pub initial_pair: Option<PairSpec>,
}

impl Default for VoterCompareConfig {
    fn default() -> Self {
        VoterCompareConfig {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            initial: None,
            t: 1.0,
            one_point: vec![3, 4],
            two_point: vec![(3, 4)],
            replicas: 2_000,
            trotter_eps: 0.01,
            experimental: false,
            initial_pair: None,
        }
    }
}

pub fn voter_compare(cfg: &VoterCompareConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    let graph = build_graph(&mut c, &cfg.graph);
    let n = graph.as_ref().map_or(0, |g| g.n_sites());
    let eta = opinions(&mut c, &cfg.initial, n);
    c.positive("t", cfg.t);
    c.count("replicas", cfg.replicas);
    c.positive("trotter_eps", cfg.trotter_eps);
    c.sites("one_point", &cfg.one_point, Some(n));
    let flat: Vec<usize> = cfg.two_point.iter().flat_map(|&(a, b)| [a, b]).collect();
    c.sites("two_point", &flat, Some(n));
    if let Some(p) = &cfg.initial_pair {
        c.require(cfg.experimental, "initial_pair", "general initial data needs experimental = true");
        c.pair("initial_pair", p, Some(n), true);
    }
    c.finish()?;
    let graph = graph.expect("validated");
    let mut rep = report("voter-compare", cfg.seed, cfg);
    if let (true, Some(p)) = (cfg.experimental, &cfg.initial_pair) {
        rep.warnings.push("experimental: general initial data is outside the proven regime".into());
        let start = p.build()?;
        let cmp = general_compare(&graph, &start, cfg)?;
        rep.metric("comparison", cmp);
    } else {
        let cmp = VoterComparison {
            t: cfg.t,
            one_point: cfg.one_point.clone(),
            two_point: cfg.two_point.clone(),
            replicas: cfg.replicas,
            trotter_eps: cfg.trotter_eps,
            seed: cfg.seed,
        };
        rep.metric("comparison", voter_vs_sbminf(&graph, &OpinionField::new(eta)?, &cmp)?);
    }
    Ok(ExperimentOutput { report: rep, tables: Vec::new() })
}

#[derive(Serialize)]
struct GeneralComparison {
    observable: Vec<String>,
    trotter_mean: Vec<f64>,
    trotter_se: Vec<f64>,
    pdmp_mean: Vec<f64>,
    pdmp_se: Vec<f64>,
}

fn general_compare(graph: &SiteGraph<f64>, start: &PairField, cfg: &VoterCompareConfig) -> Result<GeneralComparison> {
    let obs = |s: &PairField| -> Vec<f64> {
        cfg.one_point.iter().map(|&k| s.u[k]).chain(cfg.two_point.iter().map(|&(a, b)| s.u[a] * s.u[b])).collect()
    };
    let scheme = Trotter::new(graph, ExitLawParams::new(-1.0)?, cfg.trotter_eps)?;
    let steps = scheme.n_steps(cfg.t);
    let tro: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map_init(
            || scheme.clone(),
            |tr, i| {
                let mut rng = stream(cfg.seed, "voter-compare/trotter", i);
                let mut s = start.clone();
                for _ in 0..steps {
                    tr.step(&mut s, &mut rng);
                }
                obs(&s)
            },
        )
        .collect();
    let pdmp = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, "voter-compare/pdmp", i);
            let run = pdmp_simulate(graph, &JumpLaw::OpinionSwap, cfg.t, start, &[cfg.t], &PdmpConfig::default(), &mut rng, None)?;
            Ok(obs(&run.trajectory.states[0]))
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let summarise = |rows: &[Vec<f64>]| -> (Vec<f64>, Vec<f64>) {
        let m = rows.first().map_or(0, |r| r.len());
        (0..m)
            .map(|j| {
                let acc: MeanVar = rows.iter().map(|r| r[j]).collect();
                (acc.mean, acc.se())
            })
            .unzip()
    };
    let (tm, ts) = summarise(&tro);
    let (pm, ps) = summarise(&pdmp);
    let observable = cfg
        .one_point
        .iter()
        .map(|k| format!("u({k})"))
        .chain(cfg.two_point.iter().map(|(a, b)| format!("u({a})u({b})")))
        .collect();
    Ok(GeneralComparison { observable, trotter_mean: tm, trotter_se: ts, pdmp_mean: pm, pdmp_se: ps })
}

/// `exitlaw validate`: draws from the exit law with a KS comparison against
/// the density, a Hill fit of the magnitude tail and a mean test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitlawRunConfig {
    pub rho: f64,
    pub start: [f64; 2],
    pub samples: u64,
    pub seed: u64,
}

pub fn exitlaw_run(cfg: &ExitlawRunConfig) -> Result<ExperimentOutput> {
    let mut c = Checker::new();
    c.rho("rho", cfg.rho, false);
    c.require(cfg.start[0] >= 0.0 && cfg.start[1] >= 0.0, "start", "must be in the closed quadrant");
    c.count("samples", cfg.samples);
    c.finish()?;
    let params = ExitLawParams::new(cfg.rho)?;
    let start = (cfg.start[0], cfg.start[1]);
    let mut rng = stream(cfg.seed, "exitlaw-run", 0);
    let draws: Vec<_> = (0..cfg.samples).map(|_| sample_exit(&params, start, &mut rng)).collect();
    let mut table = Table::new("exits", &["axis", "magnitude"]);
    let (mut mu, mut mv) = (MeanVar::default(), MeanVar::default());
    let mut on = [Vec::new(), Vec::new()];
    for b in &draws {
        let (u, v) = b.to_pair();
        mu.push(u);
        mv.push(v);
        let (name, idx) = match b.axis {
            Axis::U => ("U", 0),
            Axis::V => ("V", 1),
        };
        on[idx].push(b.magnitude);
        table.row(vec![name.into(), fmt(b.magnitude)]);
    }
    let mut rep = report("exitlaw-validate-run", cfg.seed, cfg);
    let n = draws.len();
    if exit_density(&params, start, Axis::U, 1.0).is_ok() {
        for (axis, name, vals) in [(Axis::U, "ks_u", &on[0]), (Axis::V, "ks_v", &on[1])] {
            let between = |a: f64, b: f64| exit_mass(&params, start, axis, a, b).unwrap_or(f64::NAN);
            rep.metric(name, ks_subdistribution(vals, n, between));
        }
    } else {
        rep.warnings.push("exit law is atomic here; KS statistics skipped".into());
    }
    let mags: Vec<f64> = draws.iter().map(|b| b.magnitude).collect();
    if n > 1000 {
        rep.metric("hill_exponent", hill_exponent(&mags, hill_k(n)));
    }
    rep.metric("critical_exponent", params.p());
    rep.metric("mean_u", mu.mean);
    rep.metric("mean_v", mv.mean);
    rep.metric("mean_u_se", mu.se());
    rep.metric("mean_v_se", mv.se());
    rep.metric("start", cfg.start);
    Ok(ExperimentOutput { report: rep, tables: vec![table] })
}
