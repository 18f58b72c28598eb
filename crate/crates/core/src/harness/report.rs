use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// One pass/fail comparison. `passed` is decided by the experiment; the
/// numbers are kept for the report.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// Acceptance criterion number, or `None` for auxiliary diagnostics.
    pub criterion: Option<u32>,
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryReport {
    pub experiment: String,
    pub seed: u64,
    pub config: Value,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl SummaryReport {
    pub fn new(experiment: &str, seed: u64, config: Value) -> Self {
        SummaryReport {
            experiment: experiment.to_string(),
            seed,
            config,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `|observed - target| < tolerance`.
    pub fn within(&mut self, criterion: Option<u32>, name: impl Into<String>, observed: f64, target: f64, tolerance: f64) {
        let passed = (observed - target).abs() < tolerance;
        self.push(criterion, name, observed, target, tolerance, passed);
    }

    /// Records a check whose verdict was computed elsewhere.
    pub fn push(
        &mut self,
        criterion: Option<u32>,
        name: impl Into<String>,
        observed: f64,
        target: f64,
        tolerance: f64,
        passed: bool,
    ) {
        let name = name.into();
        assert!(
            self.checks.iter().all(|c| c.name != name),
            "duplicate check name {name} in {}",
            self.experiment
        );
        self.checks.push(Check { criterion, name, observed, target, tolerance, passed });
    }

    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.into(), v);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// A CSV written next to the summary.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Formats a float with full round-trip precision.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// Report plus its CSV tables.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: SummaryReport,
    pub tables: Vec<Table>,
}

impl ExperimentOutput {
    /// Writes `summary.json` and `<table>.csv` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), self.report.to_json()?)?;
        for t in &self.tables {
            t.write(&dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}
