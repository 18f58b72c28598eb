use std::path::Path;
use std::process::{Command, Output};

fn symbranch(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symbranch")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_prints_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"duality-self".to_string()));
}

#[test]
fn passing_quick_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["trotter-refine", "--quick", "--out", "tr"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("trotter-refine: PASS"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tr/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "trotter-refine");
    assert!(summary.get("runtime").is_none());
}

#[test]
fn failing_checks_exit_one() {
    // At smoke scale the occupation quantiles grow with gamma.
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["gamma-limit", "--quick"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(dir.path().join("out/gamma-limit/summary.json").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["no-such-experiment"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("bad.toml"), "bogus = 1\n").unwrap();
    let o = symbranch(&["gamma-limit", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`bogus`"));

    std::fs::write(dir.path().join("range.json"), r#"{"rho": 2.0}"#).unwrap();
    let o = symbranch(&["gamma-limit", "--config", "range.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = symbranch(&["gamma-limit", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["voter-limit", "--quick", "--seed", "11", "--out", "v"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
}

#[test]
fn exitlaw_validate_writes_draws() {
    let dir = tempfile::tempdir().unwrap();
    let o = symbranch(&["exitlaw", "validate", "--rho", "-0.3", "--start", "1,2", "--samples", "500", "--out", "ex"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("ex/exits.csv")).unwrap();
    assert_eq!(csv.lines().count(), 501);
    let o = symbranch(&["exitlaw", "validate", "--rho", "-0.3", "--start", "1", "--out", "ex"], dir.path());
    assert_ne!(o.status.code(), Some(0));
}
