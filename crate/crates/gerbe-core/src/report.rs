//! Deterministic check reports: per-check records with a pass/fail/skip
//! status and residual, rendered as plain text or JSON.
//!
//! Reports echo the run configuration and are byte-stable: identical inputs,
//! seed, and configuration produce identical JSON output.  Wall-clock timing
//! is deliberately excluded from the serialized form for that reason.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
pub struct RunConfig {
    pub tolerance: f64,
    pub seed: u64,
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { tolerance: 1e-9, seed: 0, trials: 10 }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Report {
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    /// Largest residual among non-skipped checks, if any reported one.
    pub max_residual: Option<f64>,
}

impl Report {
    pub fn new(command: &str, config: RunConfig) -> Report {
        Report {
            tool: "gerbetool".into(),
            command: command.into(),
            config,
            checks: Vec::new(),
            max_residual: None,
        }
    }

    pub fn record(&mut self, name: &str, status: Status, residual: Option<f64>, detail: Option<String>) {
        if status != Status::Skip {
            if let Some(r) = residual {
                self.max_residual = Some(self.max_residual.map_or(r, |m| m.max(r)));
            }
        }
        self.checks.push(CheckRecord { name: name.into(), status, residual, detail });
    }

    pub fn pass(&mut self, name: &str, residual: Option<f64>) {
        self.record(name, Status::Pass, residual, None);
    }

    pub fn fail(&mut self, name: &str, residual: Option<f64>, detail: String) {
        self.record(name, Status::Fail, residual, Some(detail));
    }

    pub fn skip(&mut self, name: &str, detail: String) {
        self.record(name, Status::Skip, None, Some(detail));
    }

    /// Records a check that passes iff `residual ≤ tolerance`.
    pub fn check_residual(&mut self, name: &str, residual: f64) {
        if residual.is_finite() && residual <= self.config.tolerance {
            self.pass(name, Some(residual));
        } else {
            self.fail(name, Some(residual), format!("residual {residual:e} exceeds tolerance"));
        }
    }

    /// Records an informational value that does not affect pass/fail.
    pub fn info(&mut self, name: &str, value: f64) {
        self.record(name, Status::Skip, Some(value), Some("reported, not asserted".into()));
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json_string(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} (tol {:e}, seed {}, trials {})",
            self.tool, self.command, self.config.tolerance, self.config.seed, self.config.trials
        );
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            let _ = write!(out, "{status} {}", c.name);
            if let Some(r) = c.residual {
                let _ = write!(out, " residual={r:e}");
            }
            if let Some(d) = &c.detail {
                let _ = write!(out, " ({d})");
            }
            let _ = writeln!(out);
        }
        if let Some(m) = self.max_residual {
            let _ = writeln!(out, "max residual: {m:e}");
        }
        let _ = writeln!(out, "result: {}", if self.all_passed() { "PASS" } else { "FAIL" });
        out
    }
}
