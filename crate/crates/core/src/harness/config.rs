//! Experiment configuration.
//!
//! A config file holds the parameter block of one experiment as flat keys,
//! TOML by default or JSON when the file ends in `.json`. Missing keys take
//! their defaults and unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::SiteGraph;
use crate::sbm_finite::{PairField, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// Deserialises `text` into `P`, reporting the offending key path on failure.
pub fn parse_block<P: DeserializeOwned>(text: &str, format: Format) -> Result<P> {
    let value: Value = match format {
        Format::Toml => toml::from_str(text).map_err(|e| Error::config("<document>", e.to_string().trim_end()))?,
        Format::Json => serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?,
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
    })
}

pub fn load_block<P: DeserializeOwned>(path: &Path) -> Result<P> {
    let text = std::fs::read_to_string(path)?;
    parse_block(&text, Format::from_path(path))
}

/// Range checks that name the offending key.
pub(crate) struct Checker {
    errors: Vec<(String, String)>,
}

impl Checker {
    pub fn new() -> Self {
        Checker { errors: Vec::new() }
    }

    pub fn require(&mut self, ok: bool, key: impl Into<String>, reason: impl Into<String>) {
        if !ok {
            self.errors.push((key.into(), reason.into()));
        }
    }

    pub fn positive(&mut self, key: &str, x: f64) {
        self.require(x > 0.0 && x.is_finite(), key, format!("{x} must be positive and finite"));
    }

    pub fn nonnegative(&mut self, key: &str, x: f64) {
        self.require(x >= 0.0 && x.is_finite(), key, format!("{x} must be nonnegative and finite"));
    }

    pub fn count(&mut self, key: &str, n: u64) {
        self.require(n > 0, key, "must be at least 1");
    }

    pub fn rho(&mut self, key: &str, rho: f64, open: bool) {
        let ok = if open { rho > -1.0 && rho < 1.0 } else { (-1.0..=1.0).contains(&rho) };
        let range = if open { "(-1, 1)" } else { "[-1, 1]" };
        self.require(ok, key, format!("{rho} is outside {range}"));
    }

    pub fn rhos(&mut self, key: &str, rhos: &[f64], open: bool) {
        self.require(!rhos.is_empty(), key, "must not be empty");
        for (i, &r) in rhos.iter().enumerate() {
            self.rho(&format!("{key}[{i}]"), r, open);
        }
    }

    pub fn graph(&mut self, key: &str, g: &GraphSpec) -> Option<SiteGraph<f64>> {
        match g.build() {
            Ok(graph) => Some(graph),
            Err(e) => {
                self.errors.push((key.to_string(), e.to_string()));
                None
            }
        }
    }

    pub fn pair(&mut self, key: &str, p: &PairSpec, n: Option<usize>, on_boundary: bool) {
        match p.build() {
            Ok(field) => {
                if let Some(n) = n {
                    self.require(field.len() == n, key, format!("has {} sites, graph has {n}", field.len()));
                }
                if on_boundary {
                    self.require(field.on_boundary(), key, "every site needs u * v = 0");
                }
            }
            Err(e) => self.errors.push((key.to_string(), e.to_string())),
        }
    }

    pub fn sites(&mut self, key: &str, sites: &[usize], n: Option<usize>) {
        if let Some(n) = n {
            for (i, &s) in sites.iter().enumerate() {
                self.require(s < n, format!("{key}[{i}]"), format!("site {s} out of range for {n} sites"));
            }
        }
    }

    pub fn finish(self) -> Result<()> {
        match self.errors.into_iter().next() {
            None => Ok(()),
            Some((key, reason)) => Err(Error::config(key, reason)),
        }
    }
}

/// Graph description: `{ kind = "torus", d, L }`, `{ kind = "dumbbell", rate }`
/// or `{ kind = "single" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Torus {
        d: usize,
        #[serde(rename = "L", alias = "side")]
        side: usize,
    },
    Dumbbell {
        rate: f64,
    },
    Single,
}

impl GraphSpec {
    pub fn build(&self) -> Result<SiteGraph<f64>> {
        match *self {
            GraphSpec::Torus { d, side } => SiteGraph::torus(d, side),
            GraphSpec::Dumbbell { rate } => SiteGraph::dumbbell(rate),
            GraphSpec::Single => Ok(SiteGraph::single_site()),
        }
    }

    pub fn n_sites(&self) -> Option<usize> {
        match *self {
            GraphSpec::Torus { d, side } => side.checked_pow(d as u32),
            GraphSpec::Dumbbell { .. } => Some(2),
            GraphSpec::Single => Some(1),
        }
    }
}

/// Initial pair of fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PairSpec {
    pub fn new(u: &[f64], v: &[f64]) -> Self {
        PairSpec { u: u.to_vec(), v: v.to_vec() }
    }

    pub fn build(&self) -> Result<PairField> {
        PairField::new(self.u.clone(), self.v.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    ExitlawValidate,
    MomentCurve,
    MassMartingale,
    BracketRatio,
    DualityMoment,
    DualitySelf,
    GammaLimit,
    TrotterRefine,
    PdmpVsTrotter,
    VoterLimit,
    MartingaleFunctional,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::ExitlawValidate,
        Experiment::MomentCurve,
        Experiment::MassMartingale,
        Experiment::BracketRatio,
        Experiment::DualityMoment,
        Experiment::DualitySelf,
        Experiment::GammaLimit,
        Experiment::TrotterRefine,
        Experiment::PdmpVsTrotter,
        Experiment::VoterLimit,
        Experiment::MartingaleFunctional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ExitlawValidate => "exitlaw-validate",
            Experiment::MomentCurve => "moment-curve",
            Experiment::MassMartingale => "mass-martingale",
            Experiment::BracketRatio => "bracket-ratio",
            Experiment::DualityMoment => "duality-moment",
            Experiment::DualitySelf => "duality-self",
            Experiment::GammaLimit => "gamma-limit",
            Experiment::TrotterRefine => "trotter-refine",
            Experiment::PdmpVsTrotter => "pdmp-vs-trotter",
            Experiment::VoterLimit => "voter-limit",
            Experiment::MartingaleFunctional => "martingale-functional",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitlawValidateParams {
    pub seed: u64,
    pub rhos: Vec<f64>,
    pub starts: Vec<[f64; 2]>,
    pub samples: u64,
    pub ks_tol: f64,
    pub norm_tol: f64,
    pub oracle_samples: u64,
    pub oracle_dt_min: f64,
    pub oracle_eta: f64,
    pub oracle_p_min: f64,
    pub nu_rhos: Vec<f64>,
    pub nu_scales: Vec<f64>,
    pub nu_tol: f64,
    pub trunc_eps: f64,
    pub balance_tol: f64,
}

impl Default for ExitlawValidateParams {
    fn default() -> Self {
        ExitlawValidateParams {
            seed: 42,
            rhos: vec![-0.9, -0.5, 0.0, 0.5, 0.9],
            starts: vec![[1.0, 1.0], [2.0, 0.5]],
            samples: 100_000,
            ks_tol: 0.02,
            norm_tol: 1e-6,
            oracle_samples: 10_000,
            oracle_dt_min: 1e-4,
            oracle_eta: 0.01,
            oracle_p_min: 1e-3,
            nu_rhos: vec![-0.5, 0.0, 0.5],
            nu_scales: vec![0.5, 2.0, 3.0],
            nu_tol: 1e-6,
            trunc_eps: 0.05,
            balance_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentCurveParams {
    pub seed: u64,
    pub rhos: Vec<f64>,
    pub start: [f64; 2],
    pub exit_samples: u64,
    pub hill_tol: f64,
    pub time_samples: u64,
    pub time_tol: f64,
    pub dt_min: f64,
    pub eta: f64,
    pub t_max: f64,
}

impl Default for MomentCurveParams {
    fn default() -> Self {
        MomentCurveParams {
            seed: 42,
            rhos: vec![-0.5, 0.0, 0.5],
            start: [1.0, 1.0],
            exit_samples: 1_000_000,
            hill_tol: 0.10,
            time_samples: 100_000,
            time_tol: 0.15,
            dt_min: 1e-4,
            eta: 0.01,
            t_max: 1e9,
        }
    }
}

/// Shared block of the two finite-rate mass experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub rhos: Vec<f64>,
    pub horizon: f64,
    pub replicas: u64,
    pub dt: f64,
    pub scheme: Scheme,
    pub initial: PairSpec,
    pub z_tol: f64,
    pub ratio_tol: f64,
    pub clock_grid: f64,
    pub timechange_tol: f64,
}

impl Default for MassParams {
    fn default() -> Self {
        MassParams {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 8 },
            gamma: 1.0,
            rhos: vec![-0.5, 0.0, 0.5],
            horizon: 1.0,
            replicas: 10_000,
            dt: 1e-3,
            scheme: Scheme::Euler,
            initial: PairSpec::new(&[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5], &[0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0]),
            z_tol: 3.0,
            ratio_tol: 0.05,
            clock_grid: 0.01,
            timechange_tol: 0.10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualityMomentParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub t: f64,
    pub rhos: Vec<f64>,
    pub replicas: u64,
    pub dt: f64,
    pub initial: PairSpec,
    pub u_site: usize,
    pub v_site: usize,
}

impl Default for DualityMomentParams {
    fn default() -> Self {
        DualityMomentParams {
            seed: 42,
            graph: GraphSpec::Dumbbell { rate: 1.0 },
            gamma: 1.0,
            t: 0.5,
            rhos: vec![-0.5, 0.0],
            replicas: 100_000,
            dt: 1e-3,
            initial: PairSpec::new(&[1.0, 0.5], &[0.5, 1.0]),
            u_site: 0,
            v_site: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualitySelfParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub gamma: f64,
    pub rho: f64,
    pub t: f64,
    pub replicas: u64,
    pub dt: f64,
    pub scheme: Scheme,
    pub x0: PairSpec,
    pub y0: PairSpec,
    pub z_tol: f64,
}

impl Default for DualitySelfParams {
    fn default() -> Self {
        DualitySelfParams {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 4 },
            gamma: 1.0,
            rho: 0.3,
            t: 0.5,
            replicas: 10_000,
            dt: 1e-3,
            scheme: Scheme::Adaptive,
            x0: PairSpec::new(&[1.0, 0.5, 0.0, 0.5], &[0.0, 0.5, 1.0, 0.5]),
            y0: PairSpec::new(&[0.6, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.6, 0.0]),
            z_tol: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaLimitParams {
    pub seed: u64,
    pub rho: f64,
    pub start: [f64; 2],
    pub gammas: Vec<f64>,
    pub samples: u64,
    pub horizon: f64,
    /// Step is `dt_scale / gamma`.
    pub dt_scale: f64,
}

impl Default for GammaLimitParams {
    fn default() -> Self {
        GammaLimitParams {
            seed: 42,
            rho: 0.0,
            start: [1.0, 1.0],
            gammas: vec![1.0, 10.0, 100.0],
            samples: 10_000,
            horizon: 1.0,
            dt_scale: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrotterRefineParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub rho: f64,
    pub t: f64,
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub replicas: u64,
    pub initial: PairSpec,
    pub site: usize,
    pub z_tol: f64,
}

impl Default for TrotterRefineParams {
    fn default() -> Self {
        TrotterRefineParams {
            seed: 42,
            graph: GraphSpec::Dumbbell { rate: 1.0 },
            rho: -0.5,
            t: 0.5,
            eps_coarse: 0.02,
            eps_fine: 0.01,
            replicas: 20_000,
            initial: PairSpec::new(&[1.0, 0.0], &[0.0, 1.0]),
            site: 0,
            z_tol: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdmpVsTrotterParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub rho: f64,
    pub t: f64,
    pub trotter_eps: f64,
    /// Two truncation levels; the jump-process estimate is extrapolated
    /// linearly to zero truncation.
    pub trunc_eps: [f64; 2],
    pub flow_substep: f64,
    pub replicas: u64,
    pub initial: PairSpec,
    pub site: usize,
    pub z_tol: f64,
}

impl Default for PdmpVsTrotterParams {
    fn default() -> Self {
        PdmpVsTrotterParams {
            seed: 42,
            graph: GraphSpec::Dumbbell { rate: 1.0 },
            rho: 0.0,
            t: 0.5,
            trotter_eps: 0.01,
            trunc_eps: [0.2, 0.1],
            flow_substep: 0.01,
            replicas: 10_000,
            initial: PairSpec::new(&[1.0, 0.0], &[0.0, 1.0]),
            site: 0,
            z_tol: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoterLimitParams {
    pub seed: u64,
    pub side: usize,
    pub t: f64,
    pub replicas: u64,
    pub trotter_eps: f64,
    pub one_point: Vec<usize>,
    pub two_point: Vec<(usize, usize)>,
    pub z_tol: f64,
}

impl Default for VoterLimitParams {
    fn default() -> Self {
        VoterLimitParams {
            seed: 42,
            side: 8,
            t: 1.0,
            replicas: 20_000,
            trotter_eps: 0.002,
            one_point: vec![3, 4],
            two_point: vec![(3, 4), (2, 5), (0, 7)],
            z_tol: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleFunctionalParams {
    pub seed: u64,
    pub graph: GraphSpec,
    pub rho: f64,
    pub t: f64,
    pub eps: f64,
    pub substeps: usize,
    pub replicas: u64,
    pub initial: PairSpec,
    pub y: PairSpec,
    pub z_tol: f64,
}

impl Default for MartingaleFunctionalParams {
    fn default() -> Self {
        MartingaleFunctionalParams {
            seed: 42,
            graph: GraphSpec::Torus { d: 1, side: 4 },
            rho: 0.3,
            t: 0.5,
            eps: 0.05,
            substeps: 10,
            replicas: 100_000,
            initial: PairSpec::new(&[1.0, 0.0, 0.5, 0.0], &[0.0, 1.0, 0.0, 1.0]),
            y: PairSpec::new(&[0.5, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.0]),
            z_tol: 3.0,
        }
    }
}

/// Parameter block of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentConfig {
    ExitlawValidate(ExitlawValidateParams),
    MomentCurve(MomentCurveParams),
    MassMartingale(MassParams),
    BracketRatio(MassParams),
    DualityMoment(DualityMomentParams),
    DualitySelf(DualitySelfParams),
    GammaLimit(GammaLimitParams),
    TrotterRefine(TrotterRefineParams),
    PdmpVsTrotter(PdmpVsTrotterParams),
    VoterLimit(VoterLimitParams),
    MartingaleFunctional(MartingaleFunctionalParams),
}

macro_rules! each {
    ($cfg:expr, $p:ident => $body:expr) => {
        match $cfg {
            ExperimentConfig::ExitlawValidate($p) => $body,
            ExperimentConfig::MomentCurve($p) => $body,
            ExperimentConfig::MassMartingale($p) => $body,
            ExperimentConfig::BracketRatio($p) => $body,
            ExperimentConfig::DualityMoment($p) => $body,
            ExperimentConfig::DualitySelf($p) => $body,
            ExperimentConfig::GammaLimit($p) => $body,
            ExperimentConfig::TrotterRefine($p) => $body,
            ExperimentConfig::PdmpVsTrotter($p) => $body,
            ExperimentConfig::VoterLimit($p) => $body,
            ExperimentConfig::MartingaleFunctional($p) => $body,
        }
    };
}

impl ExperimentConfig {
    /// Acceptance-scale defaults.
    pub fn defaults(exp: Experiment) -> Self {
        match exp {
            Experiment::ExitlawValidate => ExperimentConfig::ExitlawValidate(Default::default()),
            Experiment::MomentCurve => ExperimentConfig::MomentCurve(Default::default()),
            Experiment::MassMartingale => ExperimentConfig::MassMartingale(Default::default()),
            Experiment::BracketRatio => ExperimentConfig::BracketRatio(Default::default()),
            Experiment::DualityMoment => ExperimentConfig::DualityMoment(Default::default()),
            Experiment::DualitySelf => ExperimentConfig::DualitySelf(Default::default()),
            Experiment::GammaLimit => ExperimentConfig::GammaLimit(Default::default()),
            Experiment::TrotterRefine => ExperimentConfig::TrotterRefine(Default::default()),
            Experiment::PdmpVsTrotter => ExperimentConfig::PdmpVsTrotter(Default::default()),
            Experiment::VoterLimit => ExperimentConfig::VoterLimit(Default::default()),
            Experiment::MartingaleFunctional => ExperimentConfig::MartingaleFunctional(Default::default()),
        }
    }

    /// Small replica counts for smoke runs; verdicts are not meaningful.
    pub fn quick(exp: Experiment) -> Self {
        let mut cfg = Self::defaults(exp);
        match &mut cfg {
            ExperimentConfig::ExitlawValidate(p) => {
                p.samples = 2_000;
                p.oracle_samples = 300;
                p.rhos = vec![-0.5, 0.5];
                p.nu_rhos = vec![0.0];
            }
            ExperimentConfig::MomentCurve(p) => {
                p.exit_samples = 20_000;
                p.time_samples = 2_000;
                p.t_max = 1e5;
            }
            ExperimentConfig::MassMartingale(p) | ExperimentConfig::BracketRatio(p) => {
                p.replicas = 50;
                p.dt = 1e-2;
            }
            ExperimentConfig::DualityMoment(p) => {
                p.replicas = 500;
                p.dt = 1e-2;
            }
            ExperimentConfig::DualitySelf(p) => {
                p.replicas = 200;
                p.dt = 1e-2;
            }
            ExperimentConfig::GammaLimit(p) => {
                p.samples = 200;
                p.gammas = vec![1.0, 10.0];
                p.dt_scale = 1e-2;
            }
            ExperimentConfig::TrotterRefine(p) => p.replicas = 500,
            ExperimentConfig::PdmpVsTrotter(p) => {
                p.replicas = 200;
                p.trunc_eps = [0.3, 0.2];
            }
            ExperimentConfig::VoterLimit(p) => {
                p.replicas = 300;
                p.trotter_eps = 0.02;
            }
            ExperimentConfig::MartingaleFunctional(p) => p.replicas = 200,
        }
        cfg
    }

    pub fn parse(exp: Experiment, text: &str, format: Format) -> Result<Self> {
        let cfg = match exp {
            Experiment::ExitlawValidate => ExperimentConfig::ExitlawValidate(parse_block(text, format)?),
            Experiment::MomentCurve => ExperimentConfig::MomentCurve(parse_block(text, format)?),
            Experiment::MassMartingale => ExperimentConfig::MassMartingale(parse_block(text, format)?),
            Experiment::BracketRatio => ExperimentConfig::BracketRatio(parse_block(text, format)?),
            Experiment::DualityMoment => ExperimentConfig::DualityMoment(parse_block(text, format)?),
            Experiment::DualitySelf => ExperimentConfig::DualitySelf(parse_block(text, format)?),
            Experiment::GammaLimit => ExperimentConfig::GammaLimit(parse_block(text, format)?),
            Experiment::TrotterRefine => ExperimentConfig::TrotterRefine(parse_block(text, format)?),
            Experiment::PdmpVsTrotter => ExperimentConfig::PdmpVsTrotter(parse_block(text, format)?),
            Experiment::VoterLimit => ExperimentConfig::VoterLimit(parse_block(text, format)?),
            Experiment::MartingaleFunctional => ExperimentConfig::MartingaleFunctional(parse_block(text, format)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(exp: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(exp, &text, Format::from_path(path))
    }

    pub fn experiment(&self) -> Experiment {
        match self {
            ExperimentConfig::ExitlawValidate(_) => Experiment::ExitlawValidate,
            ExperimentConfig::MomentCurve(_) => Experiment::MomentCurve,
            ExperimentConfig::MassMartingale(_) => Experiment::MassMartingale,
            ExperimentConfig::BracketRatio(_) => Experiment::BracketRatio,
            ExperimentConfig::DualityMoment(_) => Experiment::DualityMoment,
            ExperimentConfig::DualitySelf(_) => Experiment::DualitySelf,
            ExperimentConfig::GammaLimit(_) => Experiment::GammaLimit,
            ExperimentConfig::TrotterRefine(_) => Experiment::TrotterRefine,
            ExperimentConfig::PdmpVsTrotter(_) => Experiment::PdmpVsTrotter,
            ExperimentConfig::VoterLimit(_) => Experiment::VoterLimit,
            ExperimentConfig::MartingaleFunctional(_) => Experiment::MartingaleFunctional,
        }
    }

    pub fn seed(&self) -> u64 {
        each!(self, p => p.seed)
    }

    pub fn set_seed(&mut self, seed: u64) {
        each!(self, p => p.seed = seed)
    }

    /// The parameter block as JSON, echoed into the report.
    pub fn echo(&self) -> Value {
        each!(self, p => serde_json::to_value(p).unwrap_or(Value::Null))
    }

    pub fn validate(&self) -> Result<()> {
        let mut c = Checker::new();
        match self {
            ExperimentConfig::ExitlawValidate(p) => {
                c.rhos("rhos", &p.rhos, true);
                c.require(!p.starts.is_empty(), "starts", "must not be empty");
                for (i, s) in p.starts.iter().enumerate() {
                    c.require(s[0] > 0.0 && s[1] > 0.0, format!("starts[{i}]"), "start must be inside the open quadrant");
                }
                c.count("samples", p.samples);
                c.count("oracle_samples", p.oracle_samples);
                c.positive("ks_tol", p.ks_tol);
                c.positive("norm_tol", p.norm_tol);
                c.positive("oracle_dt_min", p.oracle_dt_min);
                c.positive("oracle_eta", p.oracle_eta);
                c.require(p.oracle_p_min > 0.0 && p.oracle_p_min < 1.0, "oracle_p_min", "must lie in (0, 1)");
                c.rhos("nu_rhos", &p.nu_rhos, true);
                for (i, &a) in p.nu_scales.iter().enumerate() {
                    c.positive(&format!("nu_scales[{i}]"), a);
                }
                c.positive("nu_tol", p.nu_tol);
                c.require(p.trunc_eps > 0.0 && p.trunc_eps < 1.0, "trunc_eps", "must lie in (0, 1)");
                c.positive("balance_tol", p.balance_tol);
            }
            ExperimentConfig::MomentCurve(p) => {
                c.rhos("rhos", &p.rhos, true);
                c.require(p.start[0] > 0.0 && p.start[1] > 0.0, "start", "must be inside the open quadrant");
                c.require(p.exit_samples >= 2_000, "exit_samples", "need at least 2000 for a tail fit");
                c.require(p.time_samples >= 2_000, "time_samples", "need at least 2000 for a tail fit");
                c.positive("hill_tol", p.hill_tol);
                c.positive("time_tol", p.time_tol);
                c.positive("dt_min", p.dt_min);
                c.positive("eta", p.eta);
                c.positive("t_max", p.t_max);
            }
            ExperimentConfig::MassMartingale(p) | ExperimentConfig::BracketRatio(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.nonnegative("gamma", p.gamma);
                c.rhos("rhos", &p.rhos, false);
                c.positive("horizon", p.horizon);
                c.count("replicas", p.replicas);
                c.positive("dt", p.dt);
                c.pair("initial", &p.initial, n, false);
                c.positive("z_tol", p.z_tol);
                c.positive("ratio_tol", p.ratio_tol);
                c.positive("clock_grid", p.clock_grid);
                c.positive("timechange_tol", p.timechange_tol);
            }
            ExperimentConfig::DualityMoment(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.nonnegative("gamma", p.gamma);
                c.nonnegative("t", p.t);
                c.rhos("rhos", &p.rhos, false);
                c.count("replicas", p.replicas);
                c.positive("dt", p.dt);
                c.pair("initial", &p.initial, n, false);
                c.sites("u_site", &[p.u_site], n);
                c.sites("v_site", &[p.v_site], n);
            }
            ExperimentConfig::DualitySelf(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.nonnegative("gamma", p.gamma);
                c.rho("rho", p.rho, false);
                c.nonnegative("t", p.t);
                c.count("replicas", p.replicas);
                c.positive("dt", p.dt);
                c.pair("x0", &p.x0, n, false);
                c.pair("y0", &p.y0, n, false);
                c.positive("z_tol", p.z_tol);
            }
            ExperimentConfig::GammaLimit(p) => {
                c.rho("rho", p.rho, true);
                c.require(p.start[0] > 0.0 && p.start[1] > 0.0, "start", "must be inside the open quadrant");
                c.require(!p.gammas.is_empty(), "gammas", "must not be empty");
                for (i, &g) in p.gammas.iter().enumerate() {
                    c.positive(&format!("gammas[{i}]"), g);
                }
                c.count("samples", p.samples);
                c.positive("horizon", p.horizon);
                c.positive("dt_scale", p.dt_scale);
            }
            ExperimentConfig::TrotterRefine(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.rho("rho", p.rho, false);
                c.positive("t", p.t);
                c.positive("eps_coarse", p.eps_coarse);
                c.positive("eps_fine", p.eps_fine);
                c.count("replicas", p.replicas);
                c.pair("initial", &p.initial, n, true);
                c.sites("site", &[p.site], n);
                c.positive("z_tol", p.z_tol);
            }
            ExperimentConfig::PdmpVsTrotter(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.rho("rho", p.rho, true);
                c.positive("t", p.t);
                c.positive("trotter_eps", p.trotter_eps);
                for (i, &e) in p.trunc_eps.iter().enumerate() {
                    c.require(e > 0.0 && e < 1.0, format!("trunc_eps[{i}]"), format!("{e} must lie in (0, 1)"));
                }
                c.require(p.trunc_eps[0] != p.trunc_eps[1], "trunc_eps", "the two levels must differ");
                c.positive("flow_substep", p.flow_substep);
                c.count("replicas", p.replicas);
                c.pair("initial", &p.initial, n, true);
                c.sites("site", &[p.site], n);
                c.positive("z_tol", p.z_tol);
            }
            ExperimentConfig::VoterLimit(p) => {
                c.require(p.side >= 3, "side", "torus side must be at least 3");
                c.positive("t", p.t);
                c.count("replicas", p.replicas);
                c.positive("trotter_eps", p.trotter_eps);
                c.sites("one_point", &p.one_point, Some(p.side));
                let flat: Vec<usize> = p.two_point.iter().flat_map(|&(a, b)| [a, b]).collect();
                c.sites("two_point", &flat, Some(p.side));
                c.positive("z_tol", p.z_tol);
            }
            ExperimentConfig::MartingaleFunctional(p) => {
                let n = c.graph("graph", &p.graph).map(|g| g.n_sites());
                c.rho("rho", p.rho, false);
                c.positive("t", p.t);
                c.positive("eps", p.eps);
                c.require(p.substeps >= 1, "substeps", "must be at least 1");
                c.count("replicas", p.replicas);
                c.pair("initial", &p.initial, n, true);
                c.pair("y", &p.y, n, true);
                c.positive("z_tol", p.z_tol);
            }
        }
        c.finish()
    }
}
