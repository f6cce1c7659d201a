//! Scenario files, report emission and exit-code policy for the `corrint`
//! command-line tool.

pub mod ops;
pub mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub use scenario::{load, parse, Scenario};

/// Failures that stop a scenario before any verdict is reached.
#[derive(Debug)]
pub enum CliError {
    Parse { line: usize, column: usize, message: String },
    Invalid(String),
    Capacity(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Capacity(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Parse { line, column, message } => {
                CliError::Parse { line, column, message: format!("{}: {message}", path.display()) }
            }
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { line, column, message } => write!(f, "parse error at line {line}, column {column}: {message}"),
            CliError::Invalid(m) => write!(f, "invalid scenario: {m}"),
            CliError::Capacity(m) => write!(f, "capacity exceeded: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<corrint::Error> for CliError {
    fn from(e: corrint::Error) -> Self {
        match e {
            corrint::Error::Capacity { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OpReport {
    pub op: &'static str,
    pub pass: bool,
    pub expected: BTreeMap<String, bool>,
    pub verdicts: BTreeMap<String, bool>,
    pub result: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub name: String,
    pub seed: u64,
    pub pass: bool,
    pub operations: Vec<OpReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// A finished run: the report and the CSV series keyed by file stem.
pub struct RunOutput {
    pub report: Report,
    pub series: Vec<(String, String)>,
}

pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, CliError> {
    sc.validate()?;
    let mut operations = Vec::new();
    let mut series = Vec::new();
    for (i, spec) in sc.operations.iter().enumerate() {
        let out = spec.run.run(sc)?;
        let pass = spec.expect.iter().all(|(k, want)| out.verdicts.get(k) == Some(want));
        if let Some(s) = out.series {
            series.push((format!("{}-{i}-{}", sc.name, spec.run.name()), s.to_csv()));
        }
        operations.push(OpReport { op: spec.run.name(), pass, expected: spec.expect.clone(), verdicts: out.verdicts, result: out.result });
    }
    let pass = operations.iter().all(|o| o.pass);
    Ok(RunOutput { report: Report { schema: scenario::SCHEMA, name: sc.name.clone(), seed: sc.seed, pass, operations }, series })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes `<name>.json` to `out` (or stdout when `None`) and the series to
/// `plot_dir`. Returns the report's exit code.
pub fn emit(run: &RunOutput, out: Option<&Path>, plot_dir: Option<&Path>) -> Result<i32, CliError> {
    let text = run.report.to_json();
    match out {
        Some(dir) => write(&dir.join(format!("{}.json", run.report.name)), &text)?,
        None => print!("{text}"),
    }
    if let Some(dir) = plot_dir {
        for (stem, csv) in &run.series {
            write(&dir.join(format!("{stem}.csv")), csv)?;
        }
    }
    Ok(run.report.exit_code())
}

/// Scenario files named by `paths`; directories contribute their `*.json`
/// files in name order.
pub fn collect_configs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}
