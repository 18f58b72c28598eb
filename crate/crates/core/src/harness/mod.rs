//! Experiment harness: configuration, orchestration and reports.
//!
//! Every experiment is deterministic given its seed. Replicas run on a rayon
//! pool, each with its own stream derived from `(seed, tag, replica)`, and
//! are aggregated in replica order, so outputs do not depend on the number of
//! worker threads.

mod config;
mod experiments;
mod report;
pub mod runs;

use std::path::Path;

pub use config::{
    load_block, parse_block, DualityMomentParams, DualitySelfParams, Experiment, ExperimentConfig, ExitlawValidateParams,
    Format, GammaLimitParams, GraphSpec, MartingaleFunctionalParams, MassParams, MomentCurveParams, PairSpec,
    PdmpVsTrotterParams, TrotterRefineParams, VoterLimitParams,
};
pub use report::{fmt, Check, ExperimentOutput, SummaryReport, Table};

use crate::error::Result;

/// Runs one experiment and returns its report and tables without writing anything.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let exp = cfg.experiment();
    let mut report = SummaryReport::new(exp.name(), cfg.seed(), cfg.echo());
    let tables = match cfg {
        ExperimentConfig::ExitlawValidate(p) => experiments::exitlaw_validate(p, &mut report)?,
        ExperimentConfig::MomentCurve(p) => experiments::moment_curve(p, &mut report)?,
        ExperimentConfig::MassMartingale(p) => experiments::mass_martingale(p, &mut report)?,
        ExperimentConfig::BracketRatio(p) => experiments::bracket_ratio(p, &mut report)?,
        ExperimentConfig::DualityMoment(p) => experiments::duality_moment(p, &mut report)?,
        ExperimentConfig::DualitySelf(p) => experiments::duality_self(p, &mut report)?,
        ExperimentConfig::GammaLimit(p) => experiments::gamma_limit(p, &mut report)?,
        ExperimentConfig::TrotterRefine(p) => experiments::trotter_refine(p, &mut report)?,
        ExperimentConfig::PdmpVsTrotter(p) => experiments::pdmp_vs_trotter(p, &mut report)?,
        ExperimentConfig::VoterLimit(p) => experiments::voter_limit(p, &mut report)?,
        ExperimentConfig::MartingaleFunctional(p) => experiments::martingale_check(p, &mut report)?,
    };
    Ok(ExperimentOutput { report, tables })
}

/// Runs an experiment and writes `summary.json` and its CSV tables to `out`.
pub fn run_and_write(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput> {
    let output = run_experiment(cfg)?;
    output.write(out)?;
    Ok(output)
}
