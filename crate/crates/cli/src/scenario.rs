use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use corrint::measure_space::{parse_rational, Rational};
use corrint::sequence_space::{NormFlavor, Topology, Workspace};

use crate::ops::Operation;
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workspace: WorkspaceSpec,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default)]
    pub construction: ConstructionSpec,
    #[serde(default)]
    pub algebra: AlgebraChoice,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub operations: Vec<OpSpec>,
}

fn default_cap() -> u64 {
    10_000_000
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    /// Defaults to `k (N + 1)`, the smallest dimension the construction fits.
    pub dim: Option<usize>,
    #[serde(default)]
    pub norm: NormFlavor,
    #[serde(default)]
    pub topology: Topology,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default = "zero_text")]
    pub gamma: String,
    #[serde(default = "three", rename = "L")]
    pub level: u32,
    /// Atoms per dyadic cell.
    #[serde(default = "one")]
    pub refinement: usize,
}

fn zero_text() -> String {
    "0".into()
}

fn three() -> u32 {
    3
}

fn one() -> usize {
    1
}

impl Default for SpaceSpec {
    fn default() -> Self {
        SpaceSpec { gamma: zero_text(), level: 3, refinement: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSpec {
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default = "seven", rename = "N")]
    pub n_trunc: u64,
}

fn two() -> usize {
    2
}

fn seven() -> u64 {
    7
}

impl Default for ConstructionSpec {
    fn default() -> Self {
        ConstructionSpec { k: 2, n_trunc: 7 }
    }
}

/// Strategy / selection algebra relative to the cell algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgebraChoice {
    /// Selections may vary atom by atom inside a cell.
    #[default]
    Atoms,
    /// Selections are constant on cells: the two algebras coincide.
    Coincide,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "exact_tol")]
    pub exact: f64,
    #[serde(default = "solver_tol")]
    pub solver: f64,
}

fn exact_tol() -> f64 {
    1e-12
}

fn solver_tol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: exact_tol(), solver: solver_tol() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    pub run: Operation,
    /// Verdict name to required value. Unlisted verdicts are informational.
    #[serde(default)]
    pub expect: BTreeMap<String, bool>,
}

impl Scenario {
    pub fn gamma(&self) -> Result<Rational, CliError> {
        parse_rational(&self.space.gamma).map_err(|e| CliError::Invalid(format!("space.gamma: {e}")))
    }

    pub fn dim(&self) -> usize {
        self.workspace.dim.unwrap_or(self.construction.k * (self.construction.n_trunc as usize + 1))
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.dim(), self.workspace.norm, self.workspace.topology)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Invalid(format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(CliError::Invalid(format!("scenario name {:?} must be non-empty [A-Za-z0-9_-]", self.name)));
        }
        let g = self.gamma()?;
        if g < Rational::from_integer(0.into()) || g >= Rational::from_integer(1.into()) {
            return Err(CliError::Invalid("space.gamma must lie in [0, 1)".into()));
        }
        if self.construction.k == 0 {
            return Err(CliError::Invalid("construction.k must be at least 1".into()));
        }
        if self.space.refinement == 0 {
            return Err(CliError::Invalid("space.refinement must be at least 1".into()));
        }
        if self.operations.is_empty() {
            return Err(CliError::Invalid("no operations".into()));
        }
        for op in &self.operations {
            let known = op.run.verdict_names();
            if let Some(bad) = op.expect.keys().find(|k| !known.contains(&k.as_str())) {
                return Err(CliError::Invalid(format!("{} has no verdict {bad:?}; known: {known:?}", op.run.name())));
            }
        }
        Ok(())
    }
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    let s: Scenario = serde_json::from_str(text)
        .map_err(|e| {
            let full = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
            CliError::Parse { line: e.line(), column: e.column(), message }
        })?;
    s.validate()?;
    Ok(s)
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| e.in_file(path))
}
