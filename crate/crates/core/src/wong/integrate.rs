use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::rhs::{wong_rhs, RhsOptions};
use super::WongState;
use crate::chart_system::ChartSystem;
use crate::error::{Result, WongError};
use crate::reduction::{fp_matrix, Base};
use crate::tensor::guarded_inverse;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum Method {
    #[default]
    Rk4,
    /// Embedded Dormand-Prince 4(5) between output times.
    Adaptive { rtol: f64, atol: f64 },
}


#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionOptions {
    pub enabled: bool,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest `|chi|` Newton is attempted from.
    pub basin: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            enabled: true,
            tol: 1e-12,
            max_iter: 20,
            basin: 1e-1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    pub rhs: RhsOptions,
    pub method: Method,
    pub projection: ProjectionOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub energy: f64,
    pub chi_residual: f64,
    /// `k^{mu nu} p_mu p_nu`.
    pub p_k_norm: f64,
    /// `gamma^{mu nu} p_mu p_nu`.
    pub p_gamma_norm: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WongState>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&WongState> {
        self.states.last()
    }

    pub fn max_chi_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.chi_residual).fold(0.0, f64::max)
    }

    /// `max |E(t) - E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        let Some(e0) = self.diagnostics.first().map(|d| d.energy) else {
            return 0.0;
        };
        let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
        self.diagnostics.iter().map(|d| (d.energy - e0).abs() / scale).fold(0.0, f64::max)
    }
}

pub fn energy(sys: &ChartSystem, s: &WongState) -> Result<f64> {
    s.check_dims(sys)?;
    let b = Base::first_order(sys, &s.q_star)?;
    let gh = b.h_metric();
    Ok(0.5 * (gh * &s.v).dot(&s.v) + 0.5 * (&b.gamma_inv * &s.p).dot(&s.p))
}

fn diagnostics(sys: &ChartSystem, s: &WongState) -> Result<StepDiagnostics> {
    let b = Base::first_order(sys, &s.q_star)?;
    let gh = b.h_metric();
    let chi = sys.constraint(&s.q_star)?;
    Ok(StepDiagnostics {
        energy: 0.5 * (gh * &s.v).dot(&s.v) + 0.5 * (&b.gamma_inv * &s.p).dot(&s.p),
        chi_residual: chi.amax(),
        p_k_norm: (sys.algebra().k_inv() * &s.p).dot(&s.p),
        p_gamma_norm: (&b.gamma_inv * &s.p).dot(&s.p),
    })
}

/// Newton iteration onto `chi = 0` along the minimum-norm direction.
/// Returns the projected point and the number of Newton steps taken.
pub fn project_constraint(sys: &ChartSystem, q: &DVector<f64>, opts: &ProjectionOptions) -> Result<(DVector<f64>, usize)> {
    let mut q = q.clone();
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let chi = sys.constraint(&q)?;
        residual = chi.amax();
        if residual <= opts.tol {
            fp_matrix(sys, &q)?;
            return Ok((q, it));
        }
        if it == opts.max_iter || !residual.is_finite() || residual > opts.basin {
            break;
        }
        let j = sys.constraint_jac(&q)?;
        let jjt = &j * j.transpose();
        let inv = guarded_inverse(&jjt, |cond| WongError::GribovHorizon { cond })?;
        q -= j.transpose() * (inv * chi);
    }
    Err(WongError::ProjectionDiverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// `v <- N v`, then drop any remaining component along the constraint
/// normals.
fn project_velocity(sys: &ChartSystem, s: &mut WongState) -> Result<()> {
    let b = Base::first_order(sys, &s.q_star)?;
    let mut v = &b.n * &s.v;
    let jjt = &b.chi_j * b.chi_j.transpose();
    let inv = guarded_inverse(&jjt, |cond| WongError::GribovHorizon { cond })?;
    v -= b.chi_j.transpose() * (inv * (&b.chi_j * &v));
    s.v = v;
    Ok(())
}

fn project_state(sys: &ChartSystem, s: &mut WongState, opts: &ProjectionOptions) -> Result<()> {
    if !opts.enabled {
        return Ok(());
    }
    let (q, _) = project_constraint(sys, &s.q_star, opts)?;
    s.q_star = q;
    project_velocity(sys, s)
}

fn field(sys: &ChartSystem, y: &DVector<f64>, opts: &RhsOptions) -> Result<DVector<f64>> {
    let n_p = sys.n_p();
    let s = WongState::unpack(y, n_p);
    let (dv, dp) = wong_rhs(sys, &s, opts)?;
    let mut out = DVector::zeros(y.len());
    out.rows_mut(0, n_p).copy_from(&s.v);
    out.rows_mut(n_p, n_p).copy_from(&dv);
    out.rows_mut(2 * n_p, dp.len()).copy_from(&dp);
    Ok(out)
}

fn rk4_step(sys: &ChartSystem, y: &DVector<f64>, h: f64, opts: &RhsOptions) -> Result<DVector<f64>> {
    let k1 = field(sys, y, opts)?;
    let k2 = field(sys, &(y + &k1 * (0.5 * h)), opts)?;
    let k3 = field(sys, &(y + &k2 * (0.5 * h)), opts)?;
    let k4 = field(sys, &(y + &k3 * h), opts)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Dormand-Prince from 0 to `span` with step control; returns the end state.
fn dopri_span(sys: &ChartSystem, y0: &DVector<f64>, span: f64, rtol: f64, atol: f64, opts: &RhsOptions) -> Result<DVector<f64>> {
    let mut y = y0.clone();
    let mut t = 0.0;
    let mut h = span;
    let mut guard = 0;
    while t < span {
        guard += 1;
        if guard > 100_000 || h < span * 1e-12 {
            return Err(WongError::EvaluationFailure("adaptive step size underflow".into()));
        }
        h = h.min(span - t);
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                ys += kj * (h * DP_A[stage][j]);
            }
            k.push(field(sys, &ys, opts)?);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (i, ki) in k.iter().enumerate() {
            y5 += ki * (h * DP_B5[i]);
            y4 += ki * (h * DP_B4[i]);
        }
        let err = (0..y.len())
            .map(|i| {
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                ((y5[i] - y4[i]) / sc).powi(2)
            })
            .sum::<f64>()
            .sqrt()
            / (y.len() as f64).sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(y)
}

/// Integrates the reduced equations for `n_steps` output intervals of
/// length `dt`, recording the state and diagnostics at every output time.
pub fn integrate(sys: &ChartSystem, s0: &WongState, dt: f64, n_steps: usize, opts: &IntegrateOptions) -> Result<Trajectory> {
    s0.check_dims(sys)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WongError::Config(format!("time step must be positive, got {dt}")));
    }
    let n_p = sys.n_p();
    let wrap = |t: f64| move |e: WongError| WongError::StepFailure { t, source: Box::new(e) };
    let mut s = s0.clone();
    project_state(sys, &mut s, &opts.projection).map_err(wrap(0.0))?;
    let mut traj = Trajectory::default();
    traj.times.push(0.0);
    traj.diagnostics.push(diagnostics(sys, &s).map_err(wrap(0.0))?);
    traj.states.push(s.clone());
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let y = s.pack();
        let y1 = match opts.method {
            Method::Rk4 => rk4_step(sys, &y, dt, &opts.rhs),
            Method::Adaptive { rtol, atol } => dopri_span(sys, &y, dt, rtol, atol, &opts.rhs),
        }
        .map_err(wrap(t))?;
        if y1.iter().any(|x| !x.is_finite()) {
            return Err(wrap(t)(WongError::EvaluationFailure("non-finite state".into())));
        }
        s = WongState::unpack(&y1, n_p);
        let t1 = (i + 1) as f64 * dt;
        project_state(sys, &mut s, &opts.projection).map_err(wrap(t1))?;
        traj.times.push(t1);
        traj.diagnostics.push(diagnostics(sys, &s).map_err(wrap(t1))?);
        traj.states.push(s.clone());
    }
    Ok(traj)
}
