//! Geodesics of the block metric on `(Q*, a)` with numerically
//! differentiated Christoffel symbols. Deliberately independent of the
//! reduction code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::group_chart::GroupChart;
use crate::chart_system::ChartSystem;
use crate::error::{Result, WongError};
use crate::tensor::guarded_inverse;
use crate::wong::{integrate, IntegrateOptions, Trajectory, WongState};

fn degenerate(what: &'static str) -> impl Fn(f64) -> WongError {
    move |c| WongError::DegenerateMetric(format!("{what} (condition number {c:.3e})"))
}

/// Section-side pieces evaluated straight from the chart.
struct Pieces {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    k: DMatrix<f64>,
    chi_j: DMatrix<f64>,
    gamma: DMatrix<f64>,
    p_perp: DMatrix<f64>,
}

impl Pieces {
    fn at(sys: &ChartSystem, q: &DVector<f64>) -> Result<Self> {
        let g = sys.metric(q)?;
        let g_inv = guarded_inverse(&g, degenerate("chart metric"))?;
        let k = sys.killing(q)?;
        let chi_j = sys.constraint_jac(q)?;
        let gamma = k.transpose() * &g * &k;
        let m = &chi_j * &g_inv * chi_j.transpose();
        let m_inv = guarded_inverse(&m, degenerate("constraint Gram matrix"))?;
        let p_perp = DMatrix::identity(g.nrows(), g.nrows()) - &g_inv * chi_j.transpose() * m_inv * &chi_j;
        Ok(Self {
            g,
            g_inv,
            k,
            chi_j,
            gamma,
            p_perp,
        })
    }

    fn connection(&self) -> Result<DMatrix<f64>> {
        let gi = guarded_inverse(&self.gamma, |cond| WongError::DegenerateOrbit { cond })?;
        Ok(gi * self.k.transpose() * &self.g)
    }
}

fn split(sys: &ChartSystem, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let np = sys.n_p();
    (y.rows(0, np).into_owned(), y.rows(np, y.len() - np).into_owned())
}

/// The block metric on `(Q*, a)`.
pub fn total_metric(sys: &ChartSystem, chart: &GroupChart, q: &DVector<f64>, a: &DVector<f64>) -> Result<DMatrix<f64>> {
    let pc = Pieces::at(sys, q)?;
    let ub = chart.frame(a)?.u_bar;
    Ok(assemble(&pc, &ub))
}

fn assemble(pc: &Pieces, ub: &DMatrix<f64>) -> DMatrix<f64> {
    let (np, ng) = (pc.g.nrows(), ub.nrows());
    let mut m = DMatrix::zeros(np + ng, np + ng);
    let gp = &pc.g * &pc.p_perp;
    m.view_mut((0, 0), (np, np)).copy_from(&(pc.p_perp.transpose() * gp));
    let off = pc.p_perp.transpose() * &pc.g * &pc.k * ub;
    m.view_mut((0, np), (np, ng)).copy_from(&off);
    m.view_mut((np, 0), (ng, np)).copy_from(&off.transpose());
    m.view_mut((np, np), (ng, ng)).copy_from(&(ub.transpose() * &pc.gamma * ub));
    (&m + m.transpose()) * 0.5
}

/// Pseudoinverse of the block metric built from `N`, `Phi^-1` and
/// `vbar = ubar^-1`.
fn pseudoinverse(pc: &Pieces, v_bar: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (np, ng) = (pc.g.nrows(), v_bar.nrows());
    let phi = &pc.chi_j * &pc.k;
    let phi_inv = guarded_inverse(&phi, |cond| WongError::GribovHorizon { cond })?;
    let lam = phi_inv * &pc.chi_j;
    let n = DMatrix::identity(np, np) - &pc.k * &lam;
    let mut p = DMatrix::zeros(np + ng, np + ng);
    p.view_mut((0, 0), (np, np)).copy_from(&(&n * &pc.g_inv * n.transpose()));
    let qa = &n * &pc.g_inv * lam.transpose() * v_bar.transpose();
    p.view_mut((0, np), (np, ng)).copy_from(&qa);
    p.view_mut((np, 0), (ng, np)).copy_from(&qa.transpose());
    p.view_mut((np, np), (ng, ng)).copy_from(&(v_bar * &lam * &pc.g_inv * lam.transpose() * v_bar.transpose()));
    Ok(p)
}

/// How the lowered geodesic equation is solved for the acceleration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Raise {
    /// Block pseudoinverse plus the constraint-normal correction.
    #[default]
    Pseudoinverse,
    /// Saddle-point system with the constraint Jacobian.
    Kkt,
}

fn metric_at(sys: &ChartSystem, chart: &GroupChart, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (q, a) = split(sys, y);
    total_metric(sys, chart, &q, &a)
}

/// Geodesic acceleration on the constraint surface.
pub fn geodesic_acceleration(sys: &ChartSystem, chart: &GroupChart, y: &DVector<f64>, ydot: &DVector<f64>, raise: Raise) -> Result<DVector<f64>> {
    let n = y.len();
    let np = sys.n_p();
    let scale = y.amax().max(1.0);
    let h = 1e-5 * scale;
    // dG[k] = d G / d y^k by central differences
    let mut dg = Vec::with_capacity(n);
    let mut yp = y.clone();
    for k in 0..n {
        yp[k] = y[k] + h;
        let gp = metric_at(sys, chart, &yp)?;
        yp[k] = y[k] - h;
        let gm = metric_at(sys, chart, &yp)?;
        yp[k] = y[k];
        dg.push((gp - gm) / (2.0 * h));
    }
    // lowered Christoffel contraction: (d_j G_ki - 1/2 d_k G_ij) yd^i yd^j
    let mut dir = DMatrix::zeros(n, n);
    for (j, d) in dg.iter().enumerate() {
        dir += d * ydot[j];
    }
    let mut rhs = -(&dir * ydot);
    for k in 0..n {
        rhs[k] += 0.5 * (&dg[k] * ydot).dot(ydot);
    }
    let (q, a) = split(sys, y);
    let qdot = ydot.rows(0, np).into_owned();
    let hq = 1e-5 * q.amax().max(1.0);
    let jp = sys.constraint_jac(&(&q + &qdot * hq))?;
    let jm = sys.constraint_jac(&(&q - &qdot * hq))?;
    let chi2 = (jp - jm) / (2.0 * hq) * &qdot;

    let pc = Pieces::at(sys, &q)?;
    let ng = sys.n_g();
    match raise {
        Raise::Pseudoinverse => {
            let frame = chart.frame(&a)?;
            let gp = pseudoinverse(&pc, &frame.v_bar)?;
            let mut acc = gp * rhs;
            let m = &pc.chi_j * &pc.g_inv * pc.chi_j.transpose();
            let m_inv = guarded_inverse(&m, degenerate("constraint Gram matrix"))?;
            let normal = &pc.g_inv * pc.chi_j.transpose() * (m_inv * chi2);
            let mut top = acc.rows_mut(0, np);
            top -= normal;
            Ok(acc)
        }
        Raise::Kkt => {
            let g = total_metric(sys, chart, &q, &a)?;
            let mut kkt = DMatrix::zeros(n + ng, n + ng);
            kkt.view_mut((0, 0), (n, n)).copy_from(&g);
            kkt.view_mut((n, 0), (ng, np)).copy_from(&pc.chi_j);
            kkt.view_mut((0, n), (np, ng)).copy_from(&pc.chi_j.transpose());
            let mut b = DVector::zeros(n + ng);
            b.rows_mut(0, n).copy_from(&rhs);
            b.rows_mut(n, ng).copy_from(&(-chi2));
            let sol = kkt
                .lu()
                .solve(&b)
                .ok_or_else(|| WongError::DegenerateMetric("saddle-point system is singular".into()))?;
            Ok(sol.rows(0, n).into_owned())
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GeodesicTrajectory {
    pub times: Vec<f64>,
    pub y: Vec<DVector<f64>>,
    pub ydot: Vec<DVector<f64>>,
    pub energy: Vec<f64>,
    pub chi_residual: Vec<f64>,
}

impl GeodesicTrajectory {
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
        self.energy.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
    }
}

pub fn geodesic_energy(sys: &ChartSystem, chart: &GroupChart, y: &DVector<f64>, ydot: &DVector<f64>) -> Result<f64> {
    Ok(0.5 * (metric_at(sys, chart, y)? * ydot).dot(ydot))
}

/// RK4 for the coordinate geodesic equation on the constraint surface.
pub fn geodesic_integrate(
    sys: &ChartSystem,
    chart: &GroupChart,
    y0: &DVector<f64>,
    ydot0: &DVector<f64>,
    dt: f64,
    n_steps: usize,
    raise: Raise,
) -> Result<GeodesicTrajectory> {
    let n = sys.n_p() + sys.n_g();
    if y0.len() != n || ydot0.len() != n {
        return Err(WongError::dim(format!("total-space state must have length {n}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(WongError::Config(format!("time step must be positive, got {dt}")));
    }
    let f = |y: &DVector<f64>, yd: &DVector<f64>| geodesic_acceleration(sys, chart, y, yd, raise);
    let mut out = GeodesicTrajectory::default();
    let mut y = y0.clone();
    let mut yd = ydot0.clone();
    let record = |out: &mut GeodesicTrajectory, t: f64, y: &DVector<f64>, yd: &DVector<f64>| -> Result<()> {
        out.times.push(t);
        out.energy.push(geodesic_energy(sys, chart, y, yd)?);
        out.chi_residual.push(sys.constraint(&y.rows(0, sys.n_p()).into_owned())?.amax());
        out.y.push(y.clone());
        out.ydot.push(yd.clone());
        Ok(())
    };
    record(&mut out, 0.0, &y, &yd)?;
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let step = || -> Result<(DVector<f64>, DVector<f64>)> {
            let a1 = f(&y, &yd)?;
            let (y2, v2) = (&y + &yd * (0.5 * dt), &yd + &a1 * (0.5 * dt));
            let a2 = f(&y2, &v2)?;
            let (y3, v3) = (&y + &v2 * (0.5 * dt), &yd + &a2 * (0.5 * dt));
            let a3 = f(&y3, &v3)?;
            let (y4, v4) = (&y + &v3 * dt, &yd + &a3 * dt);
            let a4 = f(&y4, &v4)?;
            let ny = &y + (&yd + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
            let nv = &yd + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
            Ok((ny, nv))
        };
        let (ny, nv) = step().map_err(|e| WongError::StepFailure { t, source: Box::new(e) })?;
        y = ny;
        yd = nv;
        record(&mut out, (i + 1) as f64 * dt, &y, &yd)?;
    }
    Ok(out)
}

/// Components of a total-space tangent in the horizontal/vertical frame.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub z_h: DVector<f64>,
    pub z_v: DVector<f64>,
    /// Reduced velocity (`= z_h`).
    pub v: DVector<f64>,
    /// `p = gamma rho z_v`.
    pub p: DVector<f64>,
    /// `|H z_h + L z_v - ydot|`.
    pub reconstruction: f64,
}

/// Solves `ydot = z^A H_A + z^alpha L_alpha` with
/// `H_A = N^E_A (d_E - rhobar A L)` and `L_alpha = v^mu_alpha d_mu`,
/// together with `chi_J z_h = 0`.
pub fn decompose(sys: &ChartSystem, chart: &GroupChart, y: &DVector<f64>, ydot: &DVector<f64>) -> Result<Decomposition> {
    let (np, ng) = (sys.n_p(), sys.n_g());
    let (q, a) = split(sys, y);
    let pc = Pieces::at(sys, &q)?;
    let conn = pc.connection()?;
    let fr = chart.frame(&a)?;
    let phi = &pc.chi_j * &pc.k;
    let phi_inv = guarded_inverse(&phi, |cond| WongError::GribovHorizon { cond })?;
    let n = DMatrix::identity(np, np) - &pc.k * phi_inv * &pc.chi_j;
    // rows: Q-part, a-part, chi_J z_h = 0
    let mut m = DMatrix::zeros(np + 2 * ng, np + ng);
    m.view_mut((0, 0), (np, np)).copy_from(&n);
    m.view_mut((np, 0), (ng, np)).copy_from(&(-(&fr.v * &fr.rho_bar * &conn * &n)));
    m.view_mut((np, np), (ng, ng)).copy_from(&fr.v);
    m.view_mut((np + ng, 0), (ng, np)).copy_from(&pc.chi_j);
    let mut b = DVector::zeros(np + 2 * ng);
    b.rows_mut(0, np + ng).copy_from(ydot);
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(WongError::DegenerateBasis(smin));
    }
    let z = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| WongError::EvaluationFailure(format!("basis solve: {e}")))?;
    let recon = (&m * &z - &b).rows(0, np + ng).amax();
    let z_h = z.rows(0, np).into_owned();
    let z_v = z.rows(np, ng).into_owned();
    let p = &pc.gamma * &fr.rho * &z_v;
    Ok(Decomposition {
        v: z_h.clone(),
        z_h,
        z_v,
        p,
        reconstruction: recon,
    })
}

/// Total-space initial data for a reduced state at the group identity:
/// `a = 0`, `adot = gamma^-1 p - A v`.
pub fn lift_initial(sys: &ChartSystem, s: &WongState) -> Result<(DVector<f64>, DVector<f64>)> {
    let (np, ng) = (sys.n_p(), sys.n_g());
    let pc = Pieces::at(sys, &s.q_star)?;
    let conn = pc.connection()?;
    let gi = guarded_inverse(&pc.gamma, |cond| WongError::DegenerateOrbit { cond })?;
    let adot = gi * &s.p - conn * &s.v;
    let mut y = DVector::zeros(np + ng);
    y.rows_mut(0, np).copy_from(&s.q_star);
    let mut yd = DVector::zeros(np + ng);
    yd.rows_mut(0, np).copy_from(&s.v);
    yd.rows_mut(np, ng).copy_from(&adot);
    Ok((y, yd))
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub system: String,
    pub dt: f64,
    pub n_steps: usize,
    pub max_dev_q: f64,
    pub max_dev_v: f64,
    pub max_dev_p: f64,
    pub max_deviation: f64,
    pub oracle_energy_drift: f64,
    pub wong_energy_drift: f64,
    pub oracle_chi_residual: f64,
    pub wong_chi_residual: f64,
    pub max_reconstruction: f64,
}

/// Runs the reduced integrator and the total-space geodesic from matched
/// initial data and reports the sup deviation of `(Q*, v, p)`.
/// Oracle trajectory decomposed into reduced variables at every output time.
#[derive(Clone, Debug)]
pub struct OracleReference {
    pub system: String,
    pub dt: f64,
    pub q_star: Vec<DVector<f64>>,
    pub parts: Vec<Decomposition>,
    pub energy_drift: f64,
    pub chi_residual: f64,
}

impl OracleReference {
    /// `s0` should already lie on the section with a horizontal velocity.
    pub fn new(sys: &ChartSystem, chart: &GroupChart, s0: &WongState, dt: f64, n_steps: usize, raise: Raise) -> Result<Self> {
        let (y0, yd0) = lift_initial(sys, s0)?;
        let geo = geodesic_integrate(sys, chart, &y0, &yd0, dt, n_steps, raise)?;
        let parts = geo.y.iter().zip(&geo.ydot).map(|(y, yd)| decompose(sys, chart, y, yd)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            system: sys.name().to_string(),
            dt,
            q_star: geo.y.iter().map(|y| y.rows(0, sys.n_p()).into_owned()).collect(),
            parts,
            energy_drift: geo.energy_drift(),
            chi_residual: geo.chi_residual.iter().cloned().fold(0.0, f64::max),
        })
    }

    /// Deviations of a reduced trajectory sampled at the same times.
    pub fn compare(&self, wong: &Trajectory) -> Result<CompareReport> {
        if wong.len() != self.parts.len() {
            return Err(WongError::dim("trajectory and oracle have different lengths"));
        }
        let (mut dq, mut dv, mut dp, mut recon) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (i, w) in wong.states.iter().enumerate() {
            let d = &self.parts[i];
            dq = dq.max((&self.q_star[i] - &w.q_star).amax());
            dv = dv.max((&d.v - &w.v).amax());
            dp = dp.max((&d.p - &w.p).amax());
            recon = recon.max(d.reconstruction);
        }
        Ok(CompareReport {
            system: self.system.clone(),
            dt: self.dt,
            n_steps: wong.len().saturating_sub(1),
            max_dev_q: dq,
            max_dev_v: dv,
            max_dev_p: dp,
            max_deviation: dq.max(dv).max(dp),
            oracle_energy_drift: self.energy_drift,
            wong_energy_drift: wong.energy_drift(),
            oracle_chi_residual: self.chi_residual,
            wong_chi_residual: wong.max_chi_residual(),
            max_reconstruction: recon,
        })
    }
}

pub fn compare(sys: &ChartSystem, chart: &GroupChart, s0: &WongState, dt: f64, n_steps: usize, opts: &IntegrateOptions, raise: Raise) -> Result<CompareReport> {
    let wong = integrate(sys, s0, dt, n_steps, opts)?;
    OracleReference::new(sys, chart, &wong.states[0], dt, n_steps, raise)?.compare(&wong)
}
