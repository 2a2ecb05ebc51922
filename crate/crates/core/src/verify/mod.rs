//! Invariant suites with machine-readable results.

mod analysis;
mod flow;
mod geometry;
mod operators;
mod spectral;

pub use analysis::{gn_dilation_gap, gronwall_twins, kato_worst, transport_checks};
pub use flow::{halving_ratio, one_step_errors, uniform_energy_ratio};
pub use operators::{frequency_exponent, normal_identity_gap, variational_gap};
pub use spectral::{semigroup_plane_waves, smoothing_trials};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::TargetManifold;
use crate::operators::{Mutation, OperatorContext};
use crate::spectral::GridSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const SUITES: [&str; 5] = ["geometry", "spectral", "operators", "flow", "analysis"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass when measured ≤ tolerance.
    Max,
    /// Pass when measured ≥ tolerance.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub id: String,
    pub suite: String,
    pub check: String,
    /// SHA-256 of the canonical JSON of the check inputs.
    pub inputs_hash: String,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub mutation: Option<String>,
    pub passed: bool,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn entry(&self, id: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mutation: Option<Mutation>,
    pub exec: Exec,
}

impl VerifyOptions {
    pub fn ctx(&self, m: Arc<dyn TargetManifold>, g: GridSpec) -> OperatorContext {
        OperatorContext::new(m, g)
            .with_mutation(self.mutation)
            .with_exec(self.exec)
    }
}

pub fn inputs_hash(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

/// A measured value plus named constants reported alongside it.
pub(crate) struct Measured {
    pub value: f64,
    pub constants: Vec<(&'static str, f64)>,
    pub note: Option<String>,
}

impl From<f64> for Measured {
    fn from(value: f64) -> Self {
        Self {
            value,
            constants: vec![],
            note: None,
        }
    }
}

impl Measured {
    pub fn with(value: f64, constants: Vec<(&'static str, f64)>) -> Self {
        Self {
            value,
            constants,
            note: None,
        }
    }

    pub fn note(mut self, n: &str) -> Self {
        self.note = Some(n.to_string());
        self
    }
}

pub(crate) struct Suite<'a> {
    pub name: &'static str,
    pub opts: &'a VerifyOptions,
    pub entries: Vec<ReportEntry>,
}

impl<'a> Suite<'a> {
    pub fn new(name: &'static str, opts: &'a VerifyOptions) -> Self {
        Self {
            name,
            opts,
            entries: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        id: &str,
        check: &str,
        inputs: Value,
        tolerance: f64,
        bound: Bound,
        f: impl FnOnce() -> Result<Measured>,
    ) {
        let inputs = serde_json::json!({ "id": id, "seed": self.opts.seed, "inputs": inputs });
        let (measured, constants, note) = match f() {
            Ok(m) => (m.value, m.constants, m.note),
            Err(e) => (f64::NAN, vec![], Some(format!("error: {e}"))),
        };
        let passed = match bound {
            Bound::Max => measured <= tolerance,
            Bound::Min => measured >= tolerance,
        };
        self.entries.push(ReportEntry {
            id: format!("{}.{}", self.name, id),
            suite: self.name.to_string(),
            check: check.to_string(),
            inputs_hash: inputs_hash(&inputs),
            measured,
            tolerance,
            bound,
            passed,
            constants: constants.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            note,
        });
    }
}

pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<Report> {
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => {
            return Err(Error::InvalidParam(format!(
                "unknown suite '{s}' (expected one of {SUITES:?} or all)"
            )))
        }
    };
    let mut entries = Vec::new();
    for n in names {
        entries.extend(match n {
            "geometry" => geometry::run(opts),
            "spectral" => spectral::run(opts),
            "operators" => operators::run(opts),
            "flow" => flow::run(opts),
            _ => analysis::run(opts),
        });
    }
    Ok(Report {
        suite: name.to_string(),
        seed: opts.seed,
        mutation: opts.mutation.map(|m| format!("{m:?}")),
        passed: entries.iter().all(|e| e.passed),
        entries,
    })
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
