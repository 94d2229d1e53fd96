//! Scenario runner for the `chpoisson` toolkit.
//!
//! A scenario is a JSON file naming builtin functions and structures plus
//! coefficient data, and a list of checks. [`execute`] runs the checks in
//! declaration order and returns a deterministic [`report::Report`].

pub mod build;
pub mod catalog;
pub mod error;
pub mod report;
pub mod run;
pub mod scenario;

use error::ConfigError;
use report::{CheckRecord, Report};
use scenario::{parse_scenario, Scenario};

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Replaces the scenario sample count and every per-check count.
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub fd_step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.samples {
            s.sampling.count = n;
            for c in &mut s.checks {
                c.samples = None;
            }
        }
        if let Some(t) = self.tol {
            s.tolerances.tol = Some(t);
        }
        if let Some(h) = self.fd_step {
            s.tolerances.fd_step = Some(h);
        }
    }
}

/// Resolves `catalog:<name>` or reads a file, then parses.
pub fn load(source: &str) -> Result<Scenario, Vec<ConfigError>> {
    let text = match source.strip_prefix("catalog:") {
        Some(name) => catalog::text(name)
            .ok_or_else(|| {
                vec![ConfigError::new(
                    "",
                    format!("unknown catalog entry `{name}` (see `pch catalog list`)"),
                )]
            })?
            .to_string(),
        None => std::fs::read_to_string(source)
            .map_err(|e| vec![ConfigError::new("", format!("cannot read {source}: {e}"))])?,
    };
    parse_scenario(&text)
}

/// Output of a run: the report plus trajectory CSVs keyed by check id.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub trajectories: Vec<(String, String)>,
}

/// Validates and runs every check. Configuration problems are returned
/// before anything runs; module errors are recorded per check.
pub fn execute(s: &Scenario) -> Result<RunOutput, Vec<ConfigError>> {
    let errors = build::validate(s);
    if !errors.is_empty() {
        return Err(errors);
    }
    let tol = build::tolerances(&s.tolerances).map_err(|e| vec![e])?;
    let mut records = Vec::with_capacity(s.checks.len());
    let mut trajectories = Vec::new();
    for (i, check) in s.checks.iter().enumerate() {
        let ctx = run::Ctx::new(s, i, &tol);
        let outcome = run::run_check(check, &ctx);
        records.push(CheckRecord::new(check, &outcome));
        if let Some(csv) = outcome.trajectory {
            trajectories.push((check.id.clone(), csv));
        }
    }
    Ok(RunOutput {
        report: Report::new(s, records),
        trajectories,
    })
}
