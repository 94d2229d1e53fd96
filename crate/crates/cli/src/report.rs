//! Report assembly and export.
//!
//! The JSON report is a pure function of scenario, seed and tool version:
//! no timestamps, keys in a fixed order, non-finite numbers written as null.

use std::collections::BTreeMap;

use chpoisson::Verdict;
use serde::{Deserialize, Serialize};

use crate::run::Outcome;
use crate::scenario::{CheckSpec, Scenario};

/// Bumped whenever a field is added, renamed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "pch";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub check: String,
    /// The property a passing verdict certifies.
    pub anchor: String,
    pub points_tested: usize,
    pub points_skipped: usize,
    /// `None` when the residual is not finite (the check then fails).
    pub max_residual: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl CheckRecord {
    pub fn new(spec: &CheckSpec, o: &Outcome) -> Self {
        let max_residual = finite(o.max_residual);
        // A residual that cannot be reported cannot certify anything.
        let verdict = if max_residual.is_none() && o.verdict.is_pass() {
            Verdict::Fail
        } else {
            o.verdict
        };
        Self {
            id: spec.id.clone(),
            check: spec.check.name().to_string(),
            anchor: spec.check.anchor().to_string(),
            points_tested: o.points_tested,
            points_skipped: o.points_skipped,
            max_residual,
            verdict,
            metrics: o.metrics.iter().map(|(k, v)| (k.clone(), finite(*v))).collect(),
            error: o.error.clone(),
        }
    }
}

impl Report {
    pub fn new(s: &Scenario, checks: Vec<CheckRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            scenario: s.name.clone(),
            seed: s.seed,
            samples: s.sampling.count,
            checks,
        }
    }

    /// True for an empty report as well.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_pass())
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per check.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "check",
            "verdict",
            "points_tested",
            "points_skipped",
            "max_residual",
            "error",
        ])
        .expect("in-memory write");
        for c in &self.checks {
            let verdict = serde_json::to_value(c.verdict).expect("verdict serializes");
            w.write_record([
                c.id.as_str(),
                c.check.as_str(),
                verdict.as_str().unwrap_or_default(),
                &c.points_tested.to_string(),
                &c.points_skipped.to_string(),
                &c.max_residual.map(|v| v.to_string()).unwrap_or_default(),
                c.error.as_deref().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
    }
}
