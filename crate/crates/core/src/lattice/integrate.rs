//! Time stepping of the lattice field equations with Coulomb projection.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ym_wong_rhs, GaugeField, LatticeTheory, SolverOptions};
use crate::error::{Result, WongError};
use crate::wong::{RhsOptions, WongState};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct YmOptions {
    pub rhs: RhsOptions,
    pub solver: SolverOptions,
    /// Re-impose the Coulomb condition on field and velocity after each step.
    pub project: bool,
}

impl Default for YmOptions {
    fn default() -> Self {
        Self {
            rhs: RhsOptions::default(),
            solver: SolverOptions::default(),
            project: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct YmDiagnostics {
    pub energy: f64,
    pub coulomb_residual: f64,
    /// Coulomb residual of the field before projection.
    pub coulomb_drift: f64,
    pub p_norm: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct YmTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<WongState>,
    pub diagnostics: Vec<YmDiagnostics>,
}

impl YmTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics.first().map(|d| d.energy).unwrap_or(0.0);
        let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
        self.diagnostics.iter().map(|d| (d.energy - e0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn max_coulomb_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.coulomb_residual).fold(0.0, f64::max)
    }
}

/// `1/2 <Pi v, Pi v>_G + 1/2 p gamma^-1 p`.
pub fn ym_energy(th: &LatticeTheory, s: &WongState, opts: &SolverOptions) -> Result<f64> {
    let xi = th.connection(&s.q_star, &s.v, opts)?;
    let hv = &s.v - th.d_raw(&s.q_star, &xi);
    let pi = th.gamma_inv(&s.q_star, &s.p, opts)?;
    Ok(0.5 * th.gauge_inner(&hv, &hv) + 0.5 * s.p.dot(&pi))
}

impl LatticeTheory {
    /// Puts a field, velocity and momentum on the reduced phase space:
    /// Coulomb projection of the field, `N` on the velocity and zero
    /// momentum at the reference site.
    pub fn section_state(&self, a: &GaugeField, v: &GaugeField, p: &DVector<f64>, opts: &SolverOptions) -> Result<WongState> {
        self.check_algebra(p)?;
        let a = self.coulomb_project(a, opts)?;
        self.check_gauge(v)?;
        let v = self.n_apply(&a, v, opts)?;
        Ok(WongState::new(a, v, self.restricted(p.clone())))
    }

    /// Random reduced state: uniform field entries up to `amp`, velocity
    /// entries up to `speed` and momenta in `[-1, 1]`, then [`Self::section_state`].
    pub fn random_state(&self, rng: &mut impl rand::Rng, amp: f64, speed: f64, opts: &SolverOptions) -> Result<WongState> {
        let mut uniform = |n: usize, w: f64| DVector::from_fn(n, |_, _| if w > 0.0 { rng.gen_range(-w..w) } else { 0.0 });
        let a = uniform(self.gauge_len(), amp);
        let v = uniform(self.gauge_len(), speed);
        let p = uniform(self.algebra_len(), 1.0);
        self.section_state(&a, &v, &p, opts)
    }

    fn diagnostics(&self, s: &WongState, drift: f64, opts: &SolverOptions) -> Result<YmDiagnostics> {
        Ok(YmDiagnostics {
            energy: ym_energy(self, s, opts)?,
            coulomb_residual: self.coulomb_residual(&s.q_star),
            coulomb_drift: drift,
            p_norm: s.p.norm(),
        })
    }
}

pub fn ym_integrate(th: &LatticeTheory, s0: &WongState, dt: f64, n_steps: usize, opts: &YmOptions) -> Result<YmTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WongError::Config(format!("time step must be positive, got {dt}")));
    }
    th.check_state(s0, &opts.solver)?;
    let so = &opts.solver;
    let f = |s: &WongState| -> Result<(GaugeField, DVector<f64>)> {
        let r = ym_wong_rhs(th, s, &opts.rhs, so)?;
        Ok((r.dv, r.dp))
    };
    let shift = |s: &WongState, k: &(GaugeField, GaugeField, DVector<f64>), h: f64| {
        WongState::new(&s.q_star + &k.0 * h, &s.v + &k.1 * h, &s.p + &k.2 * h)
    };
    let stage = |s: &WongState| -> Result<(GaugeField, GaugeField, DVector<f64>)> {
        let (dv, dp) = f(s)?;
        Ok((s.v.clone(), dv, dp))
    };
    let mut traj = YmTrajectory::default();
    let mut s = s0.clone();
    traj.times.push(0.0);
    traj.diagnostics.push(th.diagnostics(&s, th.coulomb_residual(&s.q_star), so)?);
    traj.states.push(s.clone());
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let step = || -> Result<(WongState, f64)> {
            let k1 = stage(&s)?;
            let k2 = stage(&shift(&s, &k1, 0.5 * dt))?;
            let k3 = stage(&shift(&s, &k2, 0.5 * dt))?;
            let k4 = stage(&shift(&s, &k3, dt))?;
            let w = dt / 6.0;
            let mut n = WongState::new(
                &s.q_star + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * w,
                &s.v + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * w,
                &s.p + (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * w,
            );
            if n.q_star.iter().chain(n.v.iter()).chain(n.p.iter()).any(|x| !x.is_finite()) {
                return Err(WongError::EvaluationFailure("non-finite state".into()));
            }
            let drift = th.coulomb_residual(&n.q_star);
            if opts.project {
                n.q_star = th.coulomb_project(&n.q_star, so)?;
                n.v = th.n_apply(&n.q_star, &n.v, so)?;
            }
            Ok((n, drift))
        };
        let (n, drift) = step().map_err(|e| WongError::StepFailure { t, source: Box::new(e) })?;
        s = n;
        let t1 = (i + 1) as f64 * dt;
        traj.times.push(t1);
        traj.diagnostics.push(th.diagnostics(&s, drift, so).map_err(|e| WongError::StepFailure { t: t1, source: Box::new(e) })?);
        traj.states.push(s.clone());
    }
    Ok(traj)
}

/// Columns `t, a_*, adot_*, p_*, energy, coulomb_residual`.
pub fn write_ym_csv(writer: impl Write, traj: &YmTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (n_p, n_g) = traj.states.first().map(|s| (s.q_star.len(), s.p.len())).unwrap_or((0, 0));
    let mut header = vec!["t".to_string()];
    header.extend((0..n_p).map(|i| format!("a_{i}")));
    header.extend((0..n_p).map(|i| format!("adot_{i}")));
    header.extend((0..n_g).map(|i| format!("p_{i}")));
    header.push("energy".into());
    header.push("coulomb_residual".into());
    w.write_record(&header).map_err(crate::wong::csv_err)?;
    for ((t, s), d) in traj.times.iter().zip(&traj.states).zip(&traj.diagnostics) {
        let mut row = vec![format!("{t:.17e}")];
        row.extend(s.q_star.iter().chain(s.v.iter()).chain(s.p.iter()).map(|x| format!("{x:.17e}")));
        row.push(format!("{:.17e}", d.energy));
        row.push(format!("{:.17e}", d.coulomb_residual));
        w.write_record(&row).map_err(crate::wong::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// A field with its shape header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub d: usize,
    pub extent: usize,
    pub n_g: usize,
    pub spacing: f64,
    /// `gauge` or `algebra`.
    pub kind: String,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn gauge(th: &LatticeTheory, a: &GaugeField) -> Result<Self> {
        th.check_gauge(a)?;
        Ok(Self::make(th, "gauge", a))
    }

    pub fn algebra(th: &LatticeTheory, e: &DVector<f64>) -> Result<Self> {
        th.check_algebra(e)?;
        Ok(Self::make(th, "algebra", e))
    }

    fn make(th: &LatticeTheory, kind: &str, f: &DVector<f64>) -> Self {
        Self {
            d: th.lattice.d,
            extent: th.lattice.extent,
            n_g: th.n_g(),
            spacing: th.lattice.spacing,
            kind: kind.into(),
            values: f.as_slice().to_vec(),
        }
    }

    /// The values after checking the header against `th`.
    pub fn field(&self, th: &LatticeTheory) -> Result<DVector<f64>> {
        if (self.d, self.extent, self.n_g) != (th.lattice.d, th.lattice.extent, th.n_g()) {
            return Err(WongError::ShapeMismatch(format!(
                "snapshot is (d={}, L={}, n_g={}), theory is (d={}, L={}, n_g={})",
                self.d,
                self.extent,
                self.n_g,
                th.lattice.d,
                th.lattice.extent,
                th.n_g()
            )));
        }
        let f = DVector::from_column_slice(&self.values);
        match self.kind.as_str() {
            "gauge" => th.check_gauge(&f)?,
            "algebra" => th.check_algebra(&f)?,
            k => return Err(WongError::Config(format!("unknown snapshot kind `{k}`"))),
        }
        Ok(f)
    }
}

pub fn write_snapshot(path: impl AsRef<Path>, snap: &Snapshot) -> Result<()> {
    let text = serde_json::to_string(snap).map_err(|e| WongError::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| WongError::Config(format!("snapshot: {e}")))
}
