//! Reduced dynamics: right-hand sides of the horizontal and vertical
//! equations, time stepping with constraint maintenance, and output.

mod integrate;
mod output;
mod rhs;
#[cfg(test)]
pub(crate) mod tests;

pub use integrate::{energy, integrate, project_constraint, IntegrateOptions, Method, ProjectionOptions, StepDiagnostics, Trajectory};
pub use output::{write_csv, write_sidecar, RunSummary};
pub(crate) use output::csv_err;
pub use rhs::{wong_rhs, wong_rhs_flat, wong_rhs_terms, FlatRhs, RhsOptions, RhsTerms};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chart_system::{sample_point, ChartSystem};
use crate::error::{Result, WongError};
use crate::reduction::{orbit_metric, ReductionData};

/// Random state of a builtin: a sampled point projected onto the section,
/// a horizontal velocity with entries up to `speed` before projection and
/// momenta in `[-1, 1]`.
pub fn random_section_state(sys: &ChartSystem, rng: &mut impl rand::Rng, speed: f64) -> Result<WongState> {
    let q = sample_point(sys.name(), rng)?;
    let wide = ProjectionOptions {
        basin: f64::INFINITY,
        ..Default::default()
    };
    let (q, _) = project_constraint(sys, &q, &wide)?;
    let d = ReductionData::compute(sys, &q)?;
    let raw = DVector::from_fn(sys.n_p(), |_, _| if speed > 0.0 { rng.gen_range(-speed..speed) } else { 0.0 });
    let v = &d.n_proj * raw;
    let p = DVector::from_fn(sys.n_g(), |_, _| rng.gen_range(-1.0..1.0));
    Ok(WongState::new(q, v, p))
}

/// Point on the section, its velocity and the vertical momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WongState {
    pub q_star: DVector<f64>,
    pub v: DVector<f64>,
    pub p: DVector<f64>,
}

impl WongState {
    pub fn new(q_star: DVector<f64>, v: DVector<f64>, p: DVector<f64>) -> Self {
        Self { q_star, v, p }
    }

    /// State from a vertical velocity `z` at the group identity: `p = gamma z`.
    pub fn from_vertical_velocity(sys: &ChartSystem, q_star: DVector<f64>, v: DVector<f64>, z: &DVector<f64>) -> Result<Self> {
        let (gamma, _) = orbit_metric(sys, &q_star)?;
        if z.len() != gamma.nrows() {
            return Err(WongError::dim("vertical velocity has the wrong length"));
        }
        let p = gamma * z;
        Ok(Self { q_star, v, p })
    }

    pub fn check_dims(&self, sys: &ChartSystem) -> Result<()> {
        if self.q_star.len() != sys.n_p() || self.v.len() != sys.n_p() || self.p.len() != sys.n_g() {
            return Err(WongError::dim(format!(
                "state has lengths ({}, {}, {}), system needs ({}, {}, {})",
                self.q_star.len(),
                self.v.len(),
                self.p.len(),
                sys.n_p(),
                sys.n_p(),
                sys.n_g()
            )));
        }
        Ok(())
    }

    pub(crate) fn pack(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.q_star.len() * 2 + self.p.len());
        let n = self.q_star.len();
        y.rows_mut(0, n).copy_from(&self.q_star);
        y.rows_mut(n, n).copy_from(&self.v);
        y.rows_mut(2 * n, self.p.len()).copy_from(&self.p);
        y
    }

    pub(crate) fn unpack(y: &DVector<f64>, n_p: usize) -> Self {
        let ng = y.len() - 2 * n_p;
        Self {
            q_star: y.rows(0, n_p).into_owned(),
            v: y.rows(n_p, n_p).into_owned(),
            p: y.rows(2 * n_p, ng).into_owned(),
        }
    }
}
