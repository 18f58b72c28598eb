use num_complex::Complex;
use rayon::prelude::*;

use super::config::*;
use super::report::{fmt, SummaryReport, Table};
use crate::duals::{moment_dual_estimate, selfdual_check, MomentDualSpec};
use crate::error::{Error, Result};
use crate::exitlaw::{
    critical_exponent, exit_density, nu_density, nu_scaled_density, sample_exit, simulate_brownian_exit, Axis,
    BoundaryPoint, BrownianExitConfig, ExitLawParams, TruncatedJumpMeasure,
};
use crate::lattice::SiteGraph;
use crate::quad;
use crate::rng::stream;
use crate::sbm_finite::{nonspatial_simulate, simulate, MassObservables, PairField, RunOptions, SdeConfig};
use crate::sbm_infinite::{martingale_functional, pdmp_simulate, JumpLaw, PdmpConfig, PdmpEvent, TestPair, Trotter};
use crate::stats::{
    hill_exponent, hill_exponent_censored, hill_k, ks_p_value, ks_subdistribution, ks_two_sample_sub, quantile, MeanVar,
};
use crate::voter::{voter_vs_sbminf, OpinionField, VoterComparison};

fn par_replicas<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::U => "U",
        Axis::V => "V",
    }
}

/// Exit-law mass on `axis` between magnitudes `a < b`, by quadrature of the density.
pub(super) fn exit_mass(params: &ExitLawParams<f64>, start: (f64, f64), axis: Axis, a: f64, b: f64) -> Result<f64> {
    let f = |r: f64| exit_density(params, start, axis, r).unwrap_or(f64::NAN);
    let p = params.p();
    if a >= b {
        return Ok(0.0);
    }
    match (a == 0.0, b.is_infinite()) {
        (true, true) => Ok(quad::integrate_pow(f, 0.0, 1.0, p)? + quad::integrate_tail(f, 1.0, p + 1.0)?),
        (false, true) => quad::integrate_tail(f, a, p + 1.0),
        (true, false) => quad::integrate_pow(f, 0.0, b, p),
        (false, false) => quad::integrate(f, a, b),
    }
}

/// Total exit mass on `axis`, integrated piecewise over a geometric grid
/// around the natural scale of the start.
fn axis_total(params: &ExitLawParams<f64>, start: (f64, f64), axis: Axis) -> Result<f64> {
    let scale = start.0.hypot(start.1);
    let knots: Vec<f64> = (-12..=12).map(|k| scale * 2f64.powi(k)).collect();
    let mut total = exit_mass(params, start, axis, 0.0, knots[0])?;
    for w in knots.windows(2) {
        total += exit_mass(params, start, axis, w[0], w[1])?;
    }
    Ok(total + exit_mass(params, start, axis, *knots.last().expect("knots"), f64::INFINITY)?)
}

/// Splits exit points into per-axis magnitudes.
fn split_axes(points: impl IntoIterator<Item = BoundaryPoint<f64>>) -> (Vec<f64>, Vec<f64>) {
    let mut on_u = Vec::new();
    let mut on_v = Vec::new();
    for b in points {
        match b.axis {
            Axis::U => on_u.push(b.magnitude),
            Axis::V => on_v.push(b.magnitude),
        }
    }
    (on_u, on_v)
}

fn ks_exact(params: &ExitLawParams<f64>, start: (f64, f64), axis: Axis, on_axis: &[f64], n: usize) -> f64 {
    ks_subdistribution(on_axis, n, |a, b| exit_mass(params, start, axis, a, b).unwrap_or(f64::NAN))
}

fn rho_label(rho: f64) -> String {
    format!("rho={rho}")
}

pub(super) fn exitlaw_validate(p: &ExitlawValidateParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "exitlaw",
        &["rho", "start_u", "start_v", "axis", "exact_mass", "sampled_mass", "ks_exact", "oracle_ks", "oracle_p"],
    );
    let oracle_cfg = BrownianExitConfig { dt_min: p.oracle_dt_min, eta: p.oracle_eta, t_max: 1e9 };
    let mut ci = 0u64;
    for &rho in &p.rhos {
        let params = ExitLawParams::new(rho)?;
        for s in &p.starts {
            let start = (s[0], s[1]);
            let label = format!("{} start=({},{})", rho_label(rho), s[0], s[1]);
            let mass_u = axis_total(&params, start, Axis::U)?;
            let mass_v = axis_total(&params, start, Axis::V)?;
            report.within(Some(2), format!("normalization {label}"), mass_u + mass_v, 1.0, p.norm_tol);

            let n = p.samples as usize;
            let mut rng = stream(p.seed, "exitlaw-validate/sampler", ci);
            let (su, sv) = split_axes((0..n).map(|_| sample_exit(&params, start, &mut rng)));

            let oracle = par_replicas(p.oracle_samples, |i| {
                let mut rng = stream(p.seed ^ ci.wrapping_mul(0x9e37_79b9), "exitlaw-validate/oracle", i);
                simulate_brownian_exit(&params, start, &oracle_cfg, &mut rng)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let censored = oracle.iter().filter(|e| e.censored).count();
            let (ou, ov) = split_axes(oracle.iter().filter(|e| !e.censored).map(|e| e.point));
            let no = oracle.len();
            report.metric(format!("oracle censored {label}"), censored);

            for (axis, sampled, orc, exact) in [(Axis::U, &su, &ou, mass_u), (Axis::V, &sv, &ov, mass_v)] {
                let an = axis_name(axis);
                let ks = ks_exact(&params, start, axis, sampled, n);
                report.push(Some(3), format!("ks {an} {label}"), ks, 0.0, p.ks_tol, ks < p.ks_tol);
                let d = ks_two_sample_sub(sampled, n, orc, no);
                let pv = ks_p_value(d, n, no);
                report.push(Some(3), format!("oracle {an} {label}"), pv, p.oracle_p_min, 0.0, pv > p.oracle_p_min);
                table.row(vec![
                    fmt(rho),
                    fmt(s[0]),
                    fmt(s[1]),
                    an.into(),
                    fmt(exact),
                    fmt(sampled.len() as f64 / n as f64),
                    fmt(ks),
                    fmt(d),
                    fmt(pv),
                ]);
            }
            ci += 1;
        }
    }

    let mut nu_table = Table::new("jump_measure", &["rho", "quantity", "a", "lhs", "rhs"]);
    for &rho in &p.nu_rhos {
        let params = ExitLawParams::new(rho)?;
        let pp = params.p();
        let label = rho_label(rho);
        let nu = |axis: Axis, y: f64| nu_density(&params, BoundaryPoint::new(axis, y)).unwrap_or(f64::NAN);
        let m2 = quad::integrate_pow(|y| y * nu(Axis::V, y), 0.0, 1.0, pp)?
            + quad::integrate_tail(|y| y * nu(Axis::V, y), 1.0, pp)?;
        report.within(Some(5), format!("V first moment {label}"), m2, 1.0, p.nu_tol);
        nu_table.row(vec![fmt(rho), "v_first_moment".into(), String::new(), fmt(m2), fmt(1.0)]);

        for &a in &p.nu_scales {
            for (fi, (fu, fv)) in scaling_functions(a).into_iter().enumerate() {
                let lhs = integrate_axis(&|y| fu(y) * scaled(&params, a, Axis::U, y), pp, &[a])?
                    + integrate_axis(&|y| fv(y) * scaled(&params, a, Axis::V, y), pp, &[])?;
                let rhs = (integrate_axis(&|y| fu(a * y) * nu(Axis::U, y), pp, &[1.0])?
                    + integrate_axis(&|y| fv(a * y) * nu(Axis::V, y), pp, &[])?)
                    / a;
                report.within(Some(5), format!("scaling f{} a={a} {label}", fi + 1), lhs - rhs, 0.0, p.nu_tol);
                nu_table.row(vec![fmt(rho), format!("scaling_f{}", fi + 1), fmt(a), fmt(lhs), fmt(rhs)]);
            }
        }

        let m = TruncatedJumpMeasure::new(rho, p.trunc_eps)?;
        report.within(Some(5), format!("balance eps={} {label}", p.trunc_eps), m.balance(), 0.0, p.balance_tol);
        let (lo, hi) = (1.0 - m.eps_prime(), 1.0 + m.eps());
        let recomputed = quad::integrate_pow(|y| (y - 1.0) * nu(Axis::U, y), 0.0, lo, pp)?
            + quad::integrate_tail(|y| (y - 1.0) * nu(Axis::U, y), hi, pp)?
            - (quad::integrate_pow(|y| nu(Axis::V, y), 0.0, 1.0, pp)?
                + quad::integrate_tail(|y| nu(Axis::V, y), 1.0, pp + 1.0)?);
        report.within(None, format!("balance recomputed eps={} {label}", p.trunc_eps), recomputed, 0.0, 1e-8);
        report.within(None, format!("truncated V first moment {label}"), m.m2(), 1.0, 1e-8);
        report.metric(format!("eps_prime {label}"), m.eps_prime());
        nu_table.row(vec![fmt(rho), "balance".into(), fmt(p.trunc_eps), fmt(m.balance()), fmt(recomputed)]);
    }
    Ok(vec![table, nu_table])
}

fn scaled(params: &ExitLawParams<f64>, a: f64, axis: Axis, y: f64) -> f64 {
    nu_scaled_density(params, a, BoundaryPoint::new(axis, y)).unwrap_or(f64::NAN)
}

type TestFn = Box<dyn Fn(f64) -> f64>;

/// Test functions for the scaling identity, as `(on U, on V)`. On the `U`
/// axis they vanish to second order at the pole `a` of the scaled measure.
fn scaling_functions(a: f64) -> Vec<(TestFn, TestFn)> {
    vec![
        (Box::new(move |y: f64| (y - a).powi(2) / (1.0 + y.powi(3))), Box::new(|_| 0.0)),
        (Box::new(|_| 0.0), Box::new(|y: f64| 1.0 / (1.0 + y * y))),
        (Box::new(move |y: f64| (y - a).powi(2) * (-y).exp()), Box::new(|y: f64| (-y).exp())),
    ]
}

/// `int_0^inf g` where `g ~ y^(p-1)` at zero and decays at least like `y^-2`,
/// split at `breaks` and a few fixed scales.
fn integrate_axis(g: &dyn Fn(f64) -> f64, p: f64, breaks: &[f64]) -> Result<f64> {
    let mut pts: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().chain(breaks).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = quad::integrate_pow(g, 0.0, pts[0], p)?;
    for w in pts.windows(2) {
        total += quad::integrate(g, w[0], w[1])?;
    }
    Ok(total + quad::integrate_tail(g, *pts.last().expect("points"), 2.0)?)
}

pub(super) fn moment_curve(p: &MomentCurveParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    for (rho, want, exact) in [(0.0, 2.0, true), (1.0, 1.0, true), (-0.5, 3.0, false), (0.5, 1.5, false)] {
        let got = critical_exponent(rho)?;
        let name = format!("critical exponent {}", rho_label(rho));
        if exact {
            report.push(Some(1), name, got, want, 0.0, got == want);
        } else {
            report.within(Some(1), name, got, want, 1e-12);
        }
    }
    let single = critical_exponent(0.0f32)?;
    report.push(None, "critical exponent f32 rho=0", single as f64, 2.0, 0.0, single == 2.0);

    let mut table = Table::new("tail", &["rho", "p", "hill_magnitude", "k_magnitude", "hill_time", "k_time", "censored"]);
    let cfg = BrownianExitConfig { dt_min: p.dt_min, eta: p.eta, t_max: p.t_max };
    let start = (p.start[0], p.start[1]);
    for (ri, &rho) in p.rhos.iter().enumerate() {
        let params = ExitLawParams::new(rho)?;
        let pp = params.p();
        let label = rho_label(rho);
        let mut rng = stream(p.seed, "moment-curve/magnitude", ri as u64);
        let mags: Vec<f64> = (0..p.exit_samples).map(|_| sample_exit(&params, start, &mut rng).magnitude).collect();
        let k = hill_k(mags.len());
        let hill = hill_exponent(&mags, k);
        report.within(Some(4), format!("magnitude tail {label}"), hill / pp, 1.0, p.hill_tol);

        let exits = par_replicas(p.time_samples, |i| {
            let mut rng = stream(p.seed ^ (ri as u64 + 1), "moment-curve/time", i);
            simulate_brownian_exit(&params, start, &cfg, &mut rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let censored = exits.iter().filter(|e| e.censored).count();
        let times: Vec<f64> = exits.iter().map(|e| e.time.min(p.t_max)).collect();
        let kt = hill_k(times.len());
        let hill_t = hill_exponent_censored(&times, kt, p.t_max);
        report.within(Some(4), format!("exit time tail {label}"), hill_t / (pp / 2.0), 1.0, p.time_tol);
        report.metric(format!("hill magnitude {label}"), hill);
        report.metric(format!("hill time {label}"), hill_t);
        table.row(vec![
            fmt(rho),
            fmt(pp),
            fmt(hill),
            k.to_string(),
            fmt(hill_t),
            kt.to_string(),
            censored.to_string(),
        ]);
    }
    Ok(vec![table])
}

fn mass_runs(p: &MassParams, rho: f64, clock_grid: Option<f64>, tag: &str, report: &mut SummaryReport) -> Result<Vec<(MassObservables, usize)>> {
    let graph = p.graph.build()?;
    let initial = p.initial.build()?;
    let cfg = SdeConfig { gamma: p.gamma, rho, dt: p.dt, horizon: p.horizon, scheme: p.scheme };
    cfg.validate()?;
    for w in cfg.warnings() {
        if !report.warnings.contains(&w) {
            report.warnings.push(w);
        }
    }
    let opts = RunOptions { clock_grid, ..Default::default() };
    let ri = p.rhos.iter().position(|&r| r == rho).unwrap_or(0) as u64;
    par_replicas(p.replicas, |i| {
        let mut rng = stream(p.seed.wrapping_add(ri), tag, i);
        simulate(&graph, &cfg, &initial, &opts, &mut rng).map(|r| (r.observables, r.clamps))
    })
    .into_iter()
    .collect()
}

pub(super) fn mass_martingale(p: &MassParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let initial = p.initial.build()?;
    let (u0, v0) = (initial.total_u(), initial.total_v());
    let mut table = Table::new("mass", &["rho", "mean_u", "se_u", "mean_v", "se_v", "clamps"]);
    for &rho in &p.rhos {
        let runs = mass_runs(p, rho, None, "mass-martingale", report)?;
        let mu: MeanVar = runs.iter().map(|r| r.0.total_u).collect();
        let mv: MeanVar = runs.iter().map(|r| r.0.total_v).collect();
        let clamps: usize = runs.iter().map(|r| r.1).sum();
        let label = rho_label(rho);
        report.within(Some(6), format!("mass u {label}"), mu.mean - u0, 0.0, p.z_tol * mu.se());
        report.within(None, format!("mass v {label}"), mv.mean - v0, 0.0, p.z_tol * mv.se());
        table.row(vec![fmt(rho), fmt(mu.mean), fmt(mu.se()), fmt(mv.mean), fmt(mv.se()), clamps.to_string()]);
    }
    Ok(vec![table])
}

pub(super) fn bracket_ratio(p: &MassParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let initial = p.initial.build()?;
    let mut table = Table::new(
        "brackets",
        &["rho", "quad_u", "quad_v", "cross", "ratio", "clock", "var_per_clock_u", "var_per_clock_v", "increment_corr"],
    );
    for &rho in &p.rhos {
        let runs = mass_runs(p, rho, Some(p.clock_grid), "bracket-ratio", report)?;
        let label = rho_label(rho);
        let cross: MeanVar = runs.iter().map(|r| r.0.brackets.cross).collect();
        let qu: MeanVar = runs.iter().map(|r| r.0.brackets.quad_u).collect();
        let qv: MeanVar = runs.iter().map(|r| r.0.brackets.quad_v).collect();
        let clock: MeanVar = runs.iter().map(|r| r.0.brackets.clock).collect();
        let ratio = cross.mean / (qu.mean * qv.mean).sqrt();
        if rho == 0.0 {
            report.within(Some(6), format!("bracket cross {label}"), cross.mean, 0.0, p.z_tol * cross.se());
        } else {
            report.within(Some(6), format!("bracket ratio {label}"), ratio, rho, p.ratio_tol * rho.abs());
        }

        // Increments of the total masses between clock marks.
        let (mut suu, mut svv, mut suv, mut sc) = (0.0, 0.0, 0.0, 0.0);
        for (obs, _) in &runs {
            let cs = &obs.clock_samples;
            let (mut c, mut u, mut v) = (0.0, initial.total_u(), initial.total_v());
            for j in 0..cs.clock.len() {
                let (du, dv) = (cs.total_u[j] - u, cs.total_v[j] - v);
                suu += du * du;
                svv += dv * dv;
                suv += du * dv;
                sc += cs.clock[j] - c;
                c = cs.clock[j];
                u = cs.total_u[j];
                v = cs.total_v[j];
            }
        }
        let (var_u, var_v, corr) = (suu / sc, svv / sc, suv / (suu * svv).sqrt());
        report.within(None, format!("time change variance u {label}"), var_u, 1.0, p.timechange_tol);
        report.within(None, format!("time change variance v {label}"), var_v, 1.0, p.timechange_tol);
        report.within(None, format!("time change correlation {label}"), corr, rho, p.timechange_tol);
        table.row(vec![
            fmt(rho),
            fmt(qu.mean),
            fmt(qv.mean),
            fmt(cross.mean),
            fmt(ratio),
            fmt(clock.mean),
            fmt(var_u),
            fmt(var_v),
            fmt(corr),
        ]);
    }
    Ok(vec![table])
}

pub(super) fn duality_moment(p: &DualityMomentParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = p.graph.build()?;
    let initial = p.initial.build()?;
    let mut table = Table::new("duality", &["rho", "euler_mean", "euler_se", "dual_mean", "dual_se"]);
    for (ri, &rho) in p.rhos.iter().enumerate() {
        let cfg = SdeConfig { gamma: p.gamma, rho, dt: p.dt, horizon: p.t, scheme: Default::default() };
        cfg.validate()?;
        let opts = RunOptions::default();
        let vals = par_replicas(p.replicas, |i| {
            let mut rng = stream(p.seed.wrapping_add(ri as u64), "duality-moment/euler", i);
            simulate(&graph, &cfg, &initial, &opts, &mut rng).map(|r| r.final_state.u[p.u_site] * r.final_state.v[p.v_site])
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let euler: MeanVar = vals.into_iter().collect();
        let spec = MomentDualSpec {
            gamma: p.gamma,
            rho,
            t: p.t,
            u_sites: vec![p.u_site],
            v_sites: vec![p.v_site],
            force: false,
        };
        let dual = moment_dual_estimate(&graph, &spec, &initial, p.replicas, p.seed.wrapping_add(ri as u64))?;
        let label = rho_label(rho);
        report.within(Some(7), format!("moment dual {label}"), euler.mean - dual.mean, 0.0, (1.96 * (euler.se() + dual.se)).max(EXACT_TOL));
        table.row(vec![fmt(rho), fmt(euler.mean), fmt(euler.se()), fmt(dual.mean), fmt(dual.se)]);
    }
    Ok(vec![table])
}

/// Floor on statistical tolerances, for degenerate deterministic runs.
const EXACT_TOL: f64 = 1e-9;

pub(super) fn duality_self(p: &DualitySelfParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = p.graph.build()?;
    let (x0, y0) = (p.x0.build()?, p.y0.build()?);
    let cfg = SdeConfig { gamma: p.gamma, rho: p.rho, dt: p.dt, horizon: p.t, scheme: p.scheme };
    cfg.validate()?;
    let run = |start: &PairField, tag: &str| -> Result<Vec<PairField>> {
        par_replicas(p.replicas, |i| {
            let mut rng = stream(p.seed, tag, i);
            simulate(&graph, &cfg, start, &RunOptions::default(), &mut rng).map(|r| r.final_state)
        })
        .into_iter()
        .collect()
    };
    let forward = run(&x0, "duality-self/forward")?;
    let backward = run(&y0, "duality-self/backward")?;
    let gap = selfdual_check(&forward, &backward, &x0, &y0, p.rho)?;
    report.within(Some(8), "self-duality real part", gap.re, 0.0, (p.z_tol * gap.se_re).max(EXACT_TOL));
    report.within(Some(8), "self-duality imaginary part", gap.im, 0.0, (p.z_tol * gap.se_im).max(EXACT_TOL));
    let mut table = Table::new("selfdual", &["re", "im", "se_re", "se_im", "replicas"]);
    table.row(vec![fmt(gap.re), fmt(gap.im), fmt(gap.se_re), fmt(gap.se_im), p.replicas.to_string()]);
    Ok(vec![table])
}

pub(super) fn gamma_limit(p: &GammaLimitParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let params = ExitLawParams::new(p.rho)?;
    let start = (p.start[0], p.start[1]);
    let n = p.samples as usize;
    let mut table = Table::new("gamma", &["gamma", "ks_u", "ks_v", "absorbed", "q99_occupation", "clamps"]);
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (gi, &gamma) in p.gammas.iter().enumerate() {
        let cfg = SdeConfig { gamma, rho: p.rho, dt: p.dt_scale / gamma, horizon: p.horizon, scheme: Default::default() };
        cfg.validate()?;
        let outs = par_replicas(p.samples, |i| {
            let mut rng = stream(p.seed.wrapping_add(gi as u64), "gamma-limit", i);
            nonspatial_simulate(&cfg, start, &mut rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let on_u: Vec<f64> = outs.iter().filter(|o| o.v == 0.0 && o.u > 0.0).map(|o| o.u).collect();
        let on_v: Vec<f64> = outs.iter().filter(|o| o.u == 0.0 && o.v > 0.0).map(|o| o.v).collect();
        let ks_u = ks_exact(&params, start, Axis::U, &on_u, n);
        let ks_v = ks_exact(&params, start, Axis::V, &on_v, n);
        let occ: Vec<f64> = outs.iter().map(|o| o.occupation).collect();
        let q99 = quantile(&occ, 0.99);
        let absorbed = outs.iter().filter(|o| o.absorbed).count() as f64 / n as f64;
        let clamps: usize = outs.iter().map(|o| o.clamps).sum();
        table.row(vec![fmt(gamma), fmt(ks_u), fmt(ks_v), fmt(absorbed), fmt(q99), clamps.to_string()]);
        rows.push((ks_u, ks_v, q99));
    }
    for i in 1..rows.len() {
        let (g0, g1) = (p.gammas[i - 1], p.gammas[i]);
        let (a, b) = (rows[i - 1], rows[i]);
        report.push(Some(9), format!("ks U decreases gamma {g0} -> {g1}"), b.0, a.0, 0.0, b.0 < a.0);
        report.push(Some(9), format!("ks V decreases gamma {g0} -> {g1}"), b.1, a.1, 0.0, b.1 < a.1);
        report.push(Some(9), format!("occupation q99 non-increasing gamma {g0} -> {g1}"), b.2, a.2, 0.0, b.2 <= a.2);
    }
    Ok(vec![table])
}

/// Observables of the infinite-rate process at one site.
fn site_observables(s: &PairField, k: usize) -> [f64; 3] {
    [if s.u[k] > 0.0 { 1.0 } else { 0.0 }, s.u[k], (s.u[k] + s.v[k]).sqrt()]
}

const SITE_OBSERVABLES: [&str; 3] = ["type", "u", "sqrt_magnitude"];

fn off_boundary_sites(s: &PairField) -> usize {
    (0..s.len()).filter(|&k| s.u[k] * s.v[k] != 0.0 || s.u[k] < 0.0 || s.v[k] < 0.0).count()
}

fn trotter_observables(
    graph: &SiteGraph<f64>,
    rho: f64,
    eps: f64,
    t: f64,
    initial: &PairField,
    site: usize,
    replicas: u64,
    seed: u64,
    tag: &str,
) -> Result<([MeanVar; 3], usize)> {
    let scheme = Trotter::new(graph, ExitLawParams::new(rho)?, eps)?;
    let steps = scheme.n_steps(t);
    let finals = (0..replicas)
        .into_par_iter()
        .map_init(
            || scheme.clone(),
            |tr, i| {
                let mut rng = stream(seed, tag, i);
                let mut s = initial.clone();
                for _ in 0..steps {
                    tr.step(&mut s, &mut rng);
                }
                (site_observables(&s, site), off_boundary_sites(&s))
            },
        )
        .collect::<Vec<_>>();
    let mut acc = [MeanVar::default(); 3];
    let mut bad = 0;
    for (obs, b) in finals {
        for (a, x) in acc.iter_mut().zip(obs) {
            a.push(x);
        }
        bad += b;
    }
    Ok((acc, bad))
}

pub(super) fn trotter_refine(p: &TrotterRefineParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = p.graph.build()?;
    let initial = p.initial.build()?;
    let (coarse, bad_c) =
        trotter_observables(&graph, p.rho, p.eps_coarse, p.t, &initial, p.site, p.replicas, p.seed, "trotter-refine/coarse")?;
    let (fine, bad_f) =
        trotter_observables(&graph, p.rho, p.eps_fine, p.t, &initial, p.site, p.replicas, p.seed, "trotter-refine/fine")?;
    let mut table = Table::new("refine", &["eps", "observable", "mean", "se"]);
    for (j, name) in SITE_OBSERVABLES.iter().enumerate() {
        let (a, b) = (&coarse[j], &fine[j]);
        let crit = if *name == "u" { None } else { Some(10) };
        report.within(crit, format!("trotter refinement {name}"), a.mean - b.mean, 0.0, p.z_tol * a.se().hypot(b.se()));
        table.row(vec![fmt(p.eps_coarse), name.to_string(), fmt(a.mean), fmt(a.se())]);
        table.row(vec![fmt(p.eps_fine), name.to_string(), fmt(b.mean), fmt(b.se())]);
    }
    let exact = graph.heat_semigroup(p.t)?.apply(&initial.u)?[p.site];
    report.within(None, "trotter mean u vs heat flow", fine[1].mean - exact, 0.0, p.z_tol * fine[1].se());
    report.push(Some(10), "E-constraint trotter-refine", (bad_c + bad_f) as f64, 0.0, 0.0, bad_c + bad_f == 0);
    Ok(vec![table])
}

pub(super) fn pdmp_vs_trotter(p: &PdmpVsTrotterParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = p.graph.build()?;
    let initial = p.initial.build()?;
    let mut table = Table::new(
        "pdmp",
        &["method", "eps", "observable", "mean", "se", "jumps_per_replica", "zeroed_mass_per_replica", "halvings"],
    );
    let (tro, bad_t) =
        trotter_observables(&graph, p.rho, p.trotter_eps, p.t, &initial, p.site, p.replicas, p.seed, "pdmp-vs-trotter/trotter")?;
    for (j, name) in SITE_OBSERVABLES.iter().enumerate() {
        table.row(vec![
            "trotter".into(),
            fmt(p.trotter_eps),
            name.to_string(),
            fmt(tro[j].mean),
            fmt(tro[j].se()),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }

    let cfg = PdmpConfig { max_substep: p.flow_substep, ..Default::default() };
    let mut levels = Vec::new();
    let mut bad_p = 0;
    for (li, &eps) in p.trunc_eps.iter().enumerate() {
        let law = JumpLaw::Truncated(TruncatedJumpMeasure::new(p.rho, eps)?);
        let runs = par_replicas(p.replicas, |i| {
            let mut rng = stream(p.seed.wrapping_add(li as u64), "pdmp-vs-trotter/pdmp", i);
            let mut bad = 0usize;
            let mut watch = |ev: PdmpEvent<'_>| {
                let s = match ev {
                    PdmpEvent::Flow { state, .. } | PdmpEvent::Jump { state, .. } => state,
                };
                bad += off_boundary_sites(s);
            };
            let run = pdmp_simulate(&graph, &law, p.t, &initial, &[p.t], &cfg, &mut rng, Some(&mut watch))?;
            bad += run.trajectory.states.iter().map(off_boundary_sites).sum::<usize>();
            Ok::<_, Error>((site_observables(&run.trajectory.states[0], p.site), run.jumps, run.zeroed_mass, run.halvings, bad))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut acc = [MeanVar::default(); 3];
        let (mut jumps, mut zeroed, mut halvings) = (0usize, 0.0, 0usize);
        for (obs, j, z, h, b) in runs {
            for (a, x) in acc.iter_mut().zip(obs) {
                a.push(x);
            }
            jumps += j;
            zeroed += z;
            halvings += h;
            bad_p += b;
        }
        let r = p.replicas as f64;
        for (j, name) in SITE_OBSERVABLES.iter().enumerate() {
            table.row(vec![
                "pdmp".into(),
                fmt(eps),
                name.to_string(),
                fmt(acc[j].mean),
                fmt(acc[j].se()),
                fmt(jumps as f64 / r),
                fmt(zeroed / r),
                halvings.to_string(),
            ]);
        }
        levels.push(acc);
    }

    // Linear extrapolation to zero truncation.
    let (e1, e2) = (p.trunc_eps[0], p.trunc_eps[1]);
    let (w1, w2) = (-e2 / (e1 - e2), e1 / (e1 - e2));
    for (j, name) in SITE_OBSERVABLES.iter().enumerate() {
        let (a, b) = (&levels[0][j], &levels[1][j]);
        let mean = w1 * a.mean + w2 * b.mean;
        let se = (w1 * a.se()).hypot(w2 * b.se());
        let crit = if *name == "u" { None } else { Some(10) };
        report.within(crit, format!("pdmp vs trotter {name}"), mean - tro[j].mean, 0.0, p.z_tol * se.hypot(tro[j].se()));
        table.row(vec![
            "pdmp-extrapolated".into(),
            fmt(0.0),
            name.to_string(),
            fmt(mean),
            fmt(se),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let exact = graph.heat_semigroup(p.t)?.apply(&initial.u)?[p.site];
    report.within(None, "trotter mean u vs heat flow", tro[1].mean - exact, 0.0, p.z_tol * tro[1].se());
    report.push(Some(10), "E-constraint pdmp-vs-trotter", (bad_t + bad_p) as f64, 0.0, 0.0, bad_t + bad_p == 0);
    Ok(vec![table])
}

pub(super) fn martingale_check(p: &MartingaleFunctionalParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = p.graph.build()?;
    let initial = p.initial.build()?;
    let y = TestPair::new(p.y.build()?)?;
    let scheme = Trotter::new(&graph, ExitLawParams::new(p.rho)?, p.eps)?;
    let kernels = scheme.sub_kernels(p.substeps)?;
    let vals = (0..p.replicas)
        .into_par_iter()
        .map_init(
            || scheme.clone(),
            |tr, i| {
                let mut rng = stream(p.seed, "martingale-functional", i);
                let path = tr.sample_path(p.t, &initial, &kernels, &mut rng)?;
                let m = martingale_functional(&graph, &path, &y, p.rho)?;
                Ok::<_, Error>((m, off_boundary_sites(&path.terminal)))
            },
        )
        .collect::<Result<Vec<(Complex<f64>, usize)>>>()?;
    let bad: usize = vals.iter().map(|v| v.1).sum();
    let est = crate::duals::ComplexEstimate::from_samples(vals.iter().map(|v| v.0));
    report.within(Some(10), "martingale functional real part", est.re, 0.0, p.z_tol * est.se_re);
    report.within(Some(10), "martingale functional imaginary part", est.im, 0.0, p.z_tol * est.se_im);
    report.push(Some(10), "E-constraint martingale-functional", bad as f64, 0.0, 0.0, bad == 0);
    let mut table = Table::new("martingale", &["re", "im", "se_re", "se_im", "replicas"]);
    table.row(vec![fmt(est.re), fmt(est.im), fmt(est.se_re), fmt(est.se_im), p.replicas.to_string()]);
    Ok(vec![table])
}

pub(super) fn voter_limit(p: &VoterLimitParams, report: &mut SummaryReport) -> Result<Vec<Table>> {
    let graph = SiteGraph::torus(1, p.side)?;
    let initial = OpinionField::new((0..p.side).map(|k| u8::from(k < p.side / 2)).collect())?;
    let cmp = VoterComparison {
        t: p.t,
        one_point: p.one_point.clone(),
        two_point: p.two_point.clone(),
        replicas: p.replicas,
        trotter_eps: p.trotter_eps,
        seed: p.seed,
    };
    let rep = voter_vs_sbminf(&graph, &initial, &cmp)?;
    let mut table = Table::new("voter", &["estimator", "observable", "mean", "se"]);
    for e in &rep.estimators {
        for (k, m) in p.one_point.iter().zip(&e.one_point) {
            table.row(vec![e.name.clone(), format!("eta({k})"), fmt(m.mean), fmt(m.se)]);
        }
        for ((a, b), m) in p.two_point.iter().zip(&e.two_point) {
            table.row(vec![e.name.clone(), format!("eta({a})eta({b})"), fmt(m.mean), fmt(m.se)]);
        }
    }
    for (k, m) in p.one_point.iter().zip(&rep.dual_one_point) {
        table.row(vec!["coalescing-dual".into(), format!("eta({k})"), fmt(m.mean), fmt(m.se)]);
    }
    for a in 0..rep.estimators.len() {
        for b in a + 1..rep.estimators.len() {
            let (x, y) = (&rep.estimators[a], &rep.estimators[b]);
            for (j, &(s1, s2)) in p.two_point.iter().enumerate() {
                let (m1, m2) = (x.two_point[j], y.two_point[j]);
                report.within(
                    Some(11),
                    format!("{} vs {} eta({s1})eta({s2})", x.name, y.name),
                    m1.mean - m2.mean,
                    0.0,
                    p.z_tol * m1.se.hypot(m2.se),
                );
            }
            for (j, &k) in p.one_point.iter().enumerate() {
                let (m1, m2) = (x.one_point[j], y.one_point[j]);
                report.within(None, format!("{} vs {} eta({k})", x.name, y.name), m1.mean - m2.mean, 0.0, p.z_tol * m1.se.hypot(m2.se));
            }
        }
    }
    for (j, &k) in p.one_point.iter().enumerate() {
        let (m1, m2) = (rep.estimators[0].one_point[j], rep.dual_one_point[j]);
        report.within(None, format!("voter vs coalescing dual eta({k})"), m1.mean - m2.mean, 0.0, p.z_tol * m1.se.hypot(m2.se));
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    report.push(Some(11), "jump process magnitudes stay 1", flag(rep.magnitudes_preserved), 1.0, 0.0, rep.magnitudes_preserved);
    report.push(Some(11), "jump process rates equal flip rates", flag(rep.rates_match), 1.0, 0.0, rep.rates_match);
    Ok(vec![table])
}
