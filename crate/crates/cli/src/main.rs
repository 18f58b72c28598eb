//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! errors, 2 for configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use symbranch::harness::{self, runs, Experiment, ExperimentConfig, ExperimentOutput};
use symbranch::Error;

#[derive(Parser)]
#[command(name = "symbranch", version, about = "Symbiotic branching simulations and validation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exit law of correlated Brownian motion from the quadrant.
    Exitlaw {
        #[command(subcommand)]
        cmd: ExitlawCmd,
    },
    /// Finite-rate SDE.
    Sbm {
        #[command(subcommand)]
        cmd: RunCmd,
    },
    /// Infinite-rate process.
    Sbminf {
        #[command(subcommand)]
        cmd: RunCmd,
    },
    /// Dual estimators.
    Dual {
        #[command(subcommand)]
        cmd: DualCmd,
    },
    /// Voter model.
    Voter {
        #[command(subcommand)]
        cmd: VoterCmd,
    },
    /// List the experiments.
    List,
    /// `<experiment> [--config FILE] [--seed N] [--out DIR]`
    #[command(external_subcommand)]
    Experiment(Vec<String>),
}

#[derive(Subcommand)]
enum ExitlawCmd {
    Validate {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        /// Start point as `U,V`.
        #[arg(long, value_parser = parse_start)]
        start: [f64; 2],
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RunCmd {
    Run(FileArgs),
}

#[derive(Subcommand)]
enum DualCmd {
    Moment(FileArgs),
    Coalesce(FileArgs),
    Selfdual(FileArgs),
}

#[derive(Subcommand)]
enum VoterCmd {
    Run(FileArgs),
    Compare(FileArgs),
}

#[derive(Args)]
struct FileArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "symbranch <experiment>", no_binary_name = true)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Small replica counts for a smoke run.
    #[arg(long)]
    quick: bool,
}

fn parse_start(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected U,V, got `{s}`"));
    }
    let mut out = [0.0; 2];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(out)
}

enum Failure {
    Config(String),
    Run(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Run(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn load<P: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<P, Failure> {
    match path {
        Some(p) => Ok(harness::load_block(p)?),
        None => Ok(P::default()),
    }
}

fn finish(out: &ExperimentOutput, dir: &Path, started: Instant) -> Result<bool, Failure> {
    out.write(dir).with_context(|| format!("writing outputs to {}", dir.display()))?;
    let r = &out.report;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for c in &r.checks {
        let tag = c.criterion.map_or("aux".to_string(), |n| format!("C{n}"));
        println!(
            "{:4} {:5} {}  observed={:.6e} target={:.6e} tol={:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            tag,
            c.name,
            c.observed,
            c.target,
            c.tolerance
        );
    }
    println!(
        "{}: {} ({} checks, {:.1}s) -> {}",
        r.experiment,
        if r.checks.is_empty() {
            "done"
        } else if r.passed() {
            "PASS"
        } else {
            "FAIL"
        },
        r.checks.len(),
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(r.passed())
}

fn out_dir(out: &Option<PathBuf>, name: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let started = Instant::now();
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{e}");
            }
            Ok(true)
        }
        Command::Experiment(argv) => {
            let name = argv.first().cloned().unwrap_or_default();
            let exp: Experiment = name.parse()?;
            let args = ExperimentArgs::try_parse_from(&argv[1..]).map_err(|e| Failure::Config(e.to_string()))?;
            let mut cfg = match (&args.config, args.quick) {
                (Some(p), _) => ExperimentConfig::load(exp, p)?,
                (None, true) => ExperimentConfig::quick(exp),
                (None, false) => ExperimentConfig::defaults(exp),
            };
            if let Some(s) = args.seed {
                cfg.set_seed(s);
            }
            let out = harness::run_experiment(&cfg)?;
            finish(&out, &out_dir(&args.out, exp.name()), started)
        }
        Command::Exitlaw { cmd: ExitlawCmd::Validate { rho, start, samples, seed, out } } => {
            let cfg = runs::ExitlawRunConfig { rho, start, samples, seed };
            finish(&runs::exitlaw_run(&cfg)?, &out_dir(&out, "exitlaw"), started)
        }
        Command::Sbm { cmd: RunCmd::Run(a) } => finish(&runs::sbm_run(&load(&a.config)?)?, &out_dir(&a.out, "sbm"), started),
        Command::Sbminf { cmd: RunCmd::Run(a) } => {
            finish(&runs::sbminf_run(&load(&a.config)?)?, &out_dir(&a.out, "sbminf"), started)
        }
        Command::Dual { cmd } => {
            let (out, a) = match cmd {
                DualCmd::Moment(a) => (runs::dual_moment(&load(&a.config)?)?, a),
                DualCmd::Coalesce(a) => (runs::dual_coalesce(&load(&a.config)?)?, a),
                DualCmd::Selfdual(a) => (runs::dual_selfdual(&load(&a.config)?)?, a),
            };
            println!("{}", serde_json::to_string_pretty(&out.report.metrics).unwrap_or_default());
            finish(&out, &out_dir(&a.out, "dual"), started)
        }
        Command::Voter { cmd } => {
            let (out, a) = match cmd {
                VoterCmd::Run(a) => (runs::voter_run(&load(&a.config)?)?, a),
                VoterCmd::Compare(a) => (runs::voter_compare(&load(&a.config)?)?, a),
            };
            finish(&out, &out_dir(&a.out, "voter"), started)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
