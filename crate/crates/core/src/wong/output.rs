use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::integrate::{IntegrateOptions, Trajectory};
use crate::error::{Result, WongError};

/// JSON sidecar describing a trajectory file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub system: String,
    pub n_p: usize,
    pub n_g: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub options: IntegrateOptions,
    pub final_time: f64,
    pub energy_drift: f64,
    pub max_chi_residual: f64,
    /// Configuration the run was started from, verbatim.
    pub config: serde_json::Value,
}

impl RunSummary {
    pub fn new(system: &str, n_p: usize, n_g: usize, dt: f64, options: &IntegrateOptions, traj: &Trajectory, config: serde_json::Value) -> Self {
        Self {
            system: system.to_string(),
            n_p,
            n_g,
            dt,
            n_steps: traj.len().saturating_sub(1),
            options: options.clone(),
            final_time: traj.times.last().copied().unwrap_or(0.0),
            energy_drift: traj.energy_drift(),
            max_chi_residual: traj.max_chi_residual(),
            config,
        }
    }
}

pub(crate) fn csv_err(e: csv::Error) -> WongError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => WongError::Io(io),
        other => WongError::Config(format!("csv: {other:?}")),
    }
}

/// Columns `t, qstar_*, v_*, p_*, energy, chi_residual`.
pub fn write_csv(writer: impl Write, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (n_p, n_g) = traj.states.first().map(|s| (s.q_star.len(), s.p.len())).unwrap_or((0, 0));
    let mut header = vec!["t".to_string()];
    header.extend((0..n_p).map(|i| format!("qstar_{i}")));
    header.extend((0..n_p).map(|i| format!("v_{i}")));
    header.extend((0..n_g).map(|i| format!("p_{i}")));
    header.push("energy".into());
    header.push("chi_residual".into());
    w.write_record(&header).map_err(csv_err)?;
    for ((t, s), d) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let mut row = vec![format!("{t:.17e}")];
        row.extend(s.q_star.iter().chain(s.v.iter()).chain(s.p.iter()).map(|x| format!("{x:.17e}")));
        row.push(format!("{:.17e}", d.energy));
        row.push(format!("{:.17e}", d.chi_residual));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sidecar(path: impl AsRef<Path>, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| WongError::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
