use symbranch::harness::{self, parse_block, Experiment, ExperimentConfig, Format, GraphSpec, MassParams};
use symbranch::Error;

fn config_key(e: Error) -> String {
    match e {
        Error::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn unknown_keys_name_their_path() {
    let err = ExperimentConfig::parse(Experiment::MassMartingale, "gamma = 2.0\nreplica = 10\n", Format::Toml).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("replica"), "{err}");

    let text = "[graph]\nkind = \"torus\"\nd = 1\nL = 8\nwidth = 3\n";
    let err = ExperimentConfig::parse(Experiment::MassMartingale, text, Format::Toml).unwrap_err();
    assert!(err.to_string().contains("width"), "{err}");

    let err = ExperimentConfig::parse(Experiment::GammaLimit, "gammas = [1.0, \"ten\"]", Format::Toml).unwrap_err();
    assert_eq!(config_key(err), "gammas[1]");
}

#[test]
fn range_errors_name_the_key() {
    let err = ExperimentConfig::parse(Experiment::MassMartingale, "rhos = [0.0, 1.5]", Format::Toml).unwrap_err();
    assert!(err.is_config());
    assert!(config_key(err).starts_with("rhos"));
    let err = ExperimentConfig::parse(Experiment::GammaLimit, "horizon = -1.0", Format::Toml).unwrap_err();
    assert_eq!(config_key(err), "horizon");
    assert!(ExperimentConfig::parse(Experiment::GammaLimit, "horizon = 2.0", Format::Toml).is_ok());
}

#[test]
fn experiment_names_round_trip() {
    for e in Experiment::ALL {
        assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
    }
    let err = "gamma-limits".parse::<Experiment>().unwrap_err();
    assert!(matches!(err, Error::UnknownExperiment(_)));
    assert!(err.is_config());
}

#[test]
fn json_and_toml_agree() {
    let toml = "gamma = 2.0\nrhos = [-0.5]\n[graph]\nkind = \"dumbbell\"\nrate = 1.5\n";
    let json = r#"{"gamma": 2.0, "rhos": [-0.5], "graph": {"kind": "dumbbell", "rate": 1.5}}"#;
    let a: MassParams = parse_block(toml, Format::Toml).unwrap();
    let b: MassParams = parse_block(json, Format::Json).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.graph, GraphSpec::Dumbbell { rate: 1.5 });
    assert_eq!(a.replicas, MassParams::default().replicas);
    assert!(parse_block::<MassParams>("{", Format::Json).is_err());
}

#[test]
fn files_pick_their_format_from_the_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gl.json");
    std::fs::write(&path, r#"{"samples": 123, "seed": 9}"#).unwrap();
    let cfg = ExperimentConfig::load(Experiment::GammaLimit, &path).unwrap();
    assert_eq!(cfg.seed(), 9);
    assert_eq!(cfg.echo()["samples"], 123);
    assert!(ExperimentConfig::load(Experiment::GammaLimit, &dir.path().join("missing.toml")).is_err());
}

#[test]
fn quick_runs_write_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for e in [Experiment::TrotterRefine, Experiment::VoterLimit, Experiment::DualityMoment] {
        let cfg = ExperimentConfig::quick(e);
        let a = dir.path().join(format!("{e}-a"));
        let b = dir.path().join(format!("{e}-b"));
        let out = harness::run_and_write(&cfg, &a).unwrap();
        harness::run_and_write(&cfg, &b).unwrap();
        assert!(!out.report.checks.is_empty());
        assert_eq!(out.report.experiment, e.name());
        let mut names = vec!["summary.json".to_string()];
        names.extend(out.tables.iter().map(|t| format!("{}.csv", t.name)));
        for n in names {
            let (x, y) = (std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
            assert_eq!(x, y, "{e}: {n} differs");
        }
        let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["seed"], cfg.seed());
    }
}

#[test]
fn seed_changes_the_output() {
    let mut cfg = ExperimentConfig::quick(Experiment::TrotterRefine);
    let a = harness::run_experiment(&cfg).unwrap();
    cfg.set_seed(7);
    let b = harness::run_experiment(&cfg).unwrap();
    assert_eq!(b.report.seed, 7);
    let obs = |o: &harness::ExperimentOutput| o.report.checks.iter().map(|c| c.observed).collect::<Vec<_>>();
    assert_ne!(obs(&a), obs(&b));
}
