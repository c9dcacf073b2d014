//! Scenario runner behind the `wong` binary: configs in, trajectories and a
//! diagnostics report out.

pub mod config;
mod scenarios;
mod sweep;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{IntegratorConfig, LatticeConfig, MethodName, OutputConfig, RunConfig, Scenario, StateConfig, Tolerances};
pub use sweep::{order_study, run_sweep, OrderConfig, OrderReport, SweepConfig, SweepOutcome};

use crate::error::WongError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    /// Numerical failure or a monitor over its tolerance.
    Failed,
    ConfigError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::Failed => 1,
            Status::ConfigError => 2,
        }
    }
}

/// A checked quantity; `tol = None` only reports.
#[derive(Clone, Debug, Serialize)]
pub struct Monitor {
    pub name: String,
    pub value: f64,
    pub tol: Option<f64>,
    pub ok: bool,
    /// First output time at which the tolerance was exceeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceeded_at: Option<f64>,
}

impl Monitor {
    pub fn new(name: &str, value: f64, tol: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            ok: value.is_finite() && tol.is_none_or(|t| value <= t),
            exceeded_at: None,
        }
    }

    /// Maximum of a time series, with the first time it crosses `tol`.
    pub fn series(name: &str, times: &[f64], values: impl IntoIterator<Item = f64>, tol: Option<f64>) -> Self {
        let mut worst = 0.0f64;
        let mut at = None;
        for (t, v) in times.iter().zip(values) {
            worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
            if at.is_none() && tol.is_some_and(|tol| !(v <= tol)) {
                at = Some(*t);
            }
        }
        let mut m = Self::new(name, worst, tol);
        m.exceeded_at = at;
        m
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub scenario: String,
    pub system: Option<String>,
    pub status: Status,
    pub monitors: Vec<Monitor>,
    pub error: Option<String>,
    /// Time of the step that failed, for integration failures.
    pub failed_at: Option<f64>,
    pub files: Vec<PathBuf>,
    pub details: serde_json::Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn from_error(scenario: &str, system: Option<String>, e: &WongError) -> Self {
        let failed_at = match e {
            WongError::StepFailure { t, .. } => Some(*t),
            _ => None,
        };
        Self {
            scenario: scenario.into(),
            system,
            status: if e.is_config() { Status::ConfigError } else { Status::Failed },
            monitors: Vec::new(),
            error: Some(e.to_string()),
            failed_at,
            files: Vec::new(),
            details: serde_json::Value::Null,
        }
    }
}

/// What a scenario hands back before the report is assembled.
pub(crate) struct Report {
    pub monitors: Vec<Monitor>,
    pub files: Vec<PathBuf>,
    pub details: serde_json::Value,
}

fn label(cfg: &RunConfig, scenario: Scenario) -> Option<String> {
    match scenario {
        Scenario::YmRun | Scenario::YmBridgeCheck => {
            let l = cfg.lattice.clone().unwrap_or_default();
            Some(format!("lattice_{}_d{}_L{}", l.group, l.d, l.extent))
        }
        _ => cfg.system.clone(),
    }
}

/// Runs one scenario, writes the diagnostics report into `out` and returns it.
pub fn execute(scenario: Scenario, cfg: &RunConfig, out: &Path) -> Outcome {
    let system = label(cfg, scenario);
    let result = cfg.validate(scenario).and_then(|_| {
        std::fs::create_dir_all(out)?;
        scenarios::dispatch(scenario, cfg, out)
    });
    let mut outcome = match result {
        Ok(r) => Outcome {
            scenario: scenario.name().into(),
            system,
            status: if r.monitors.iter().all(|m| m.ok) { Status::Passed } else { Status::Failed },
            monitors: r.monitors,
            error: None,
            failed_at: None,
            files: r.files,
            details: r.details,
        },
        Err(e) => Outcome::from_error(scenario.name(), system, &e),
    };
    if outcome.status != Status::ConfigError {
        let path = out.join(&cfg.outputs.diagnostics);
        outcome.files.push(path.clone());
        if let Err(e) = write_json(&path, &outcome) {
            outcome.status = Status::Failed;
            outcome.error = Some(e.to_string());
        }
    }
    outcome
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> crate::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| WongError::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests;
