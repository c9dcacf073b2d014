//! Krylov solves for the orbit and Faddeev-Popov operators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AlgebraField, GaugeField, LatticeTheory};
use crate::error::{Result, WongError};

/// Gauge parameters at this site are held at zero by the reduced dynamics.
pub(crate) const REFERENCE_SITE: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Remove kernel content from right-hand sides instead of failing.
    pub project_zero_modes: bool,
    /// Smallest admissible Rayleigh quotient relative to the largest seen.
    pub gribov_tol: f64,
    /// Tolerance on the Coulomb residual of states handed to the dynamics.
    pub constraint_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            project_zero_modes: true,
            gribov_tol: 1e-10,
            constraint_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `|b - A x| / |b|` recomputed after convergence.
    pub residual: f64,
}

/// Orthonormal basis of the constant fields in the kernel of `D`.
#[derive(Clone, Debug)]
pub struct ZeroModes(pub DMatrix<f64>);

impl ZeroModes {
    pub fn at(th: &LatticeTheory, a: &GaugeField) -> Self {
        Self(th.constant_kernel(a, 1e-12))
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn content(&self, f: &DVector<f64>) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        (self.0.transpose() * f).norm()
    }

    pub fn remove(&self, f: &mut DVector<f64>) {
        if self.dim() > 0 {
            let c = self.0.transpose() * &*f;
            *f -= &self.0 * c;
        }
    }
}

/// Conjugate gradients for a symmetric operator that is positive definite
/// on the range of `project`.
pub(crate) fn cg(
    op: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    project: impl Fn(&mut DVector<f64>),
    opts: &SolverOptions,
) -> Result<(DVector<f64>, SolveStats)> {
    let mut r = b.clone();
    project(&mut r);
    let bnorm = r.norm();
    let mut x = DVector::zeros(b.len());
    if bnorm <= 1e-15 * b.norm() {
        return Ok((x, SolveStats::default()));
    }
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let mut scale = 0.0f64;
    let mut it = 0;
    while rs.sqrt() > opts.tol * bnorm {
        if it == opts.max_iter {
            return Err(WongError::SolverStalled {
                iterations: it,
                residual: rs.sqrt() / bnorm,
            });
        }
        let mut ap = op(&p);
        project(&mut ap);
        let pp = p.dot(&p);
        let pap = p.dot(&ap);
        let rq = pap / pp;
        scale = scale.max(rq);
        if !(rq > opts.gribov_tol * scale) {
            return Err(WongError::GribovHorizon { cond: scale / rq.max(0.0) });
        }
        let alpha = rs / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rs_new = r.dot(&r);
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
        it += 1;
    }
    let mut res = b - op(&x);
    project(&mut res);
    Ok((
        x,
        SolveStats {
            iterations: it,
            residual: res.norm() / bnorm,
        },
    ))
}

impl LatticeTheory {
    /// Zeroes the reference-site entries of an algebra field.
    pub(crate) fn restrict(&self, f: &mut AlgebraField) {
        let ng = self.n_g();
        f.rows_mut(REFERENCE_SITE * ng, ng).fill(0.0);
    }

    pub(crate) fn restricted(&self, mut f: AlgebraField) -> AlgebraField {
        self.restrict(&mut f);
        f
    }

    /// Solves `D^dagger D w = rhs` with constant kernel modes removed from
    /// the right-hand side and the solution.
    pub fn green_solve(&self, a: &GaugeField, rhs: &AlgebraField, opts: &SolverOptions) -> Result<AlgebraField> {
        Ok(self.green_solve_with_stats(a, rhs, opts)?.0)
    }

    pub fn green_solve_with_stats(&self, a: &GaugeField, rhs: &AlgebraField, opts: &SolverOptions) -> Result<(AlgebraField, SolveStats)> {
        self.check_gauge(a)?;
        self.check_algebra(rhs)?;
        let zm = ZeroModes::at(self, a);
        let content = zm.content(rhs);
        if !opts.project_zero_modes && content > 1e-12 * rhs.norm().max(f64::MIN_POSITIVE) {
            return Err(WongError::KernelComponent(content));
        }
        cg(|e| self.orbit_raw(a, e), rhs, |f| zm.remove(f), opts)
    }

    /// Coulomb connection `(D^dagger D)^-1 D^dagger eta`.
    pub fn coulomb_connection_apply(&self, a: &GaugeField, eta: &GaugeField, opts: &SolverOptions) -> Result<AlgebraField> {
        let rhs = self.covariant_adjoint(a, eta)?;
        self.green_solve(a, &rhs, opts)
    }

    /// Orbit-operator inverse on fields vanishing at the reference site.
    pub(crate) fn green_restricted(&self, a: &GaugeField, rhs: &AlgebraField, opts: &SolverOptions) -> Result<AlgebraField> {
        Ok(cg(|e| self.orbit_raw(a, e), rhs, |f| self.restrict(f), opts)?.0)
    }

    /// `gamma^-1 w` for a covector field `w` of the restricted group.
    pub(crate) fn gamma_inv(&self, a: &GaugeField, w: &AlgebraField, opts: &SolverOptions) -> Result<AlgebraField> {
        Ok(self.green_restricted(a, w, opts)? / self.lattice.volume_element())
    }

    /// `gamma e = h^d D^dagger D e`, restricted.
    pub(crate) fn gamma_apply(&self, a: &GaugeField, e: &AlgebraField) -> AlgebraField {
        self.restricted(self.orbit_raw(a, e) * self.lattice.volume_element())
    }

    /// Mechanical connection of the restricted group.
    pub(crate) fn connection(&self, a: &GaugeField, v: &GaugeField, opts: &SolverOptions) -> Result<AlgebraField> {
        let rhs = self.dt_raw(a, &self.k_apply(v));
        self.green_restricted(a, &rhs, opts)
    }

    /// Solves the restricted Faddeev-Popov system `div D psi = r` by
    /// conjugate gradients on the normal equations.
    pub(crate) fn fp_solve(&self, a: &GaugeField, r: &AlgebraField, opts: &SolverOptions) -> Result<AlgebraField> {
        let phi = |e: &AlgebraField| self.restricted(self.div_raw(&self.d_raw(a, e)));
        let phi_t = |y: &AlgebraField| self.dt_raw(a, &(-self.grad_raw(&self.restricted(y.clone()))));
        let rhs = phi_t(&self.restricted(r.clone()));
        let normal = SolverOptions {
            tol: opts.tol * 1e-2,
            gribov_tol: opts.gribov_tol * opts.gribov_tol,
            ..*opts
        };
        let (psi, _) = cg(|e| phi_t(&phi(e)), &rhs, |f| self.restrict(f), &normal)?;
        Ok(psi)
    }

    /// `N w = w - D Phi^-1 div w`, the projection onto Coulomb-tangent
    /// fields along the gauge directions.
    pub(crate) fn n_apply(&self, a: &GaugeField, w: &GaugeField, opts: &SolverOptions) -> Result<GaugeField> {
        let r = self.div_raw(w);
        if r.iter().all(|x| *x == 0.0) {
            return Ok(w.clone());
        }
        let psi = self.fp_solve(a, &r, opts)?;
        Ok(w - self.d_raw(a, &psi))
    }

    /// Minimal change `A - grad psi` that makes `A` divergence free.
    pub fn coulomb_project(&self, a: &GaugeField, opts: &SolverOptions) -> Result<GaugeField> {
        self.check_gauge(a)?;
        let zero = self.gauge_zeros();
        let psi = self.coulomb_connection_apply(&zero, a, opts)?;
        Ok(a - self.grad_raw(&psi))
    }

    pub fn coulomb_residual(&self, a: &GaugeField) -> f64 {
        self.div_raw(a).amax()
    }
}
