//! Finite-dimensional systems with symmetry described in a single chart.

mod builtins;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WongError};
use crate::lie_algebra::LieAlgebraSpec;
use crate::tensor::{fd_step, Tensor3};

pub use builtins::{builtin, kk_trivial, sample_point, KkPotential, BUILTIN_NAMES};

/// Point evaluators of one chart. Derivative hooks return `None` when no
/// analytic form is available; [`ChartSystem`] then differentiates
/// numerically.
pub trait ChartModel: Send + Sync {
    fn n_p(&self) -> usize;
    fn n_g(&self) -> usize;

    /// `G_AB(Q)`.
    fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `d_D G_AB` as `t[A][B][D]`.
    fn metric_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        None
    }

    /// `K^A_mu` as an `N_P x N_G` matrix.
    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `K^A_{mu B} = d K^A_mu / d Q^B` as `t[A][mu][B]`.
    fn killing_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        None
    }

    /// `chi^alpha(Q)`.
    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>>;

    /// `chi^alpha_B` as an `N_G x N_P` matrix.
    fn constraint_jac(&self, q: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `d^2 chi^alpha / dQ^B dQ^C` as `t[alpha][B][C]`.
    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivMode {
    /// Analytic derivatives when the model provides them.
    #[default]
    Auto,
    /// Always central finite differences.
    FiniteDifference,
}

/// A chart of the total space together with its symmetry algebra.
#[derive(Clone)]
pub struct ChartSystem {
    name: String,
    algebra: Arc<LieAlgebraSpec>,
    model: Arc<dyn ChartModel>,
    flat: bool,
    deriv_mode: DerivMode,
}

impl fmt::Debug for ChartSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartSystem")
            .field("name", &self.name)
            .field("n_p", &self.n_p())
            .field("n_g", &self.n_g())
            .field("algebra", &self.algebra.name())
            .field("flat", &self.flat)
            .finish()
    }
}

impl ChartSystem {
    pub fn new(
        name: impl Into<String>,
        algebra: LieAlgebraSpec,
        model: Arc<dyn ChartModel>,
        flat: bool,
    ) -> Result<Self> {
        if model.n_g() != algebra.dim() {
            return Err(WongError::dim(format!(
                "model has {} Killing fields, algebra has dim {}",
                model.n_g(),
                algebra.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            algebra: Arc::new(algebra),
            model,
            flat,
            deriv_mode: DerivMode::Auto,
        })
    }

    pub fn with_deriv_mode(mut self, mode: DerivMode) -> Self {
        self.deriv_mode = mode;
        self
    }

    /// Same chart with a different algebra (diagnostics: mutated structure
    /// constants).
    pub fn with_algebra(mut self, algebra: LieAlgebraSpec) -> Result<Self> {
        if algebra.dim() != self.n_g() {
            return Err(WongError::dim("replacement algebra has the wrong dimension"));
        }
        self.algebra = Arc::new(algebra);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn algebra_handle(&self) -> Arc<LieAlgebraSpec> {
        Arc::clone(&self.algebra)
    }
    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }
    pub fn n_p(&self) -> usize {
        self.model.n_p()
    }
    pub fn n_g(&self) -> usize {
        self.model.n_g()
    }
    pub fn is_flat(&self) -> bool {
        self.flat
    }
    pub fn deriv_mode(&self) -> DerivMode {
        self.deriv_mode
    }
    pub fn model(&self) -> &Arc<dyn ChartModel> {
        &self.model
    }

    fn check_point(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n_p() {
            return Err(WongError::dim(format!("point of length {} for N_P = {}", q.len(), self.n_p())));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(WongError::EvaluationFailure("non-finite coordinate".into()));
        }
        Ok(())
    }

    pub fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(q)?;
        self.model.metric(q)
    }

    pub fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(q)?;
        self.model.killing(q)
    }

    pub fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(q)?;
        self.model.constraint(q)
    }

    pub fn constraint_jac(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(q)?;
        self.model.constraint_jac(q)
    }

    /// True when the model supplies analytic first derivatives of both the
    /// metric and the Killing fields and they are in use.
    pub fn has_analytic_derivs(&self, q: &DVector<f64>) -> bool {
        self.deriv_mode == DerivMode::Auto
            && self.model.metric_deriv(q).is_some()
            && self.model.killing_deriv(q).is_some()
    }

    pub fn metric_deriv(&self, q: &DVector<f64>) -> Result<Tensor3> {
        self.check_point(q)?;
        if self.deriv_mode == DerivMode::Auto {
            if let Some(d) = self.model.metric_deriv(q) {
                return d;
            }
        }
        let slices = central_differences(q, |x| self.model.metric(x))?;
        Ok(Tensor3::from_slices(&slices))
    }

    pub fn killing_deriv(&self, q: &DVector<f64>) -> Result<Tensor3> {
        self.check_point(q)?;
        if self.deriv_mode == DerivMode::Auto {
            if let Some(d) = self.model.killing_deriv(q) {
                return d;
            }
        }
        let slices = central_differences(q, |x| self.model.killing(x))?;
        Ok(Tensor3::from_slices(&slices))
    }

    pub fn constraint_hessian(&self, q: &DVector<f64>) -> Result<Tensor3> {
        self.check_point(q)?;
        if self.deriv_mode == DerivMode::Auto {
            if let Some(d) = self.model.constraint_hessian(q) {
                return d;
            }
        }
        let slices = central_differences(q, |x| self.model.constraint_jac(x))?;
        Ok(Tensor3::from_slices(&slices))
    }

    /// `max |K^C_mu d_C G_AB + G_CB K^C_{mu A} + G_AC K^C_{mu B}|`.
    pub fn killing_residual(&self, q: &DVector<f64>) -> Result<f64> {
        let g = self.metric(q)?;
        let dg = self.metric_deriv(q)?;
        let k = self.killing(q)?;
        let dk = self.killing_deriv(q)?;
        let n = self.n_p();
        let mut worst: f64 = 0.0;
        for mu in 0..self.n_g() {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += k[(c, mu)] * dg.get(a, b, c)
                            + g[(c, b)] * dk.get(c, mu, a)
                            + g[(a, c)] * dk.get(c, mu, b);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Largest component of `[K_a, K_b] - c^g_{ab} K_g` with
    /// `[K_a, K_b]^A = K^B_a K^A_{b B} - K^B_b K^A_{a B}`.
    pub fn bracket_residual(&self, q: &DVector<f64>) -> Result<f64> {
        let k = self.killing(q)?;
        let dk = self.killing_deriv(q)?;
        let n = self.n_p();
        let m = self.n_g();
        let alg = self.algebra();
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in (a + 1)..m {
                for comp in 0..n {
                    let mut s = 0.0;
                    for bb in 0..n {
                        s += k[(bb, a)] * dk.get(comp, b, bb) - k[(bb, b)] * dk.get(comp, a, bb);
                    }
                    for g in 0..m {
                        s -= alg.c_at(g, a, b) * k[(comp, g)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Central differences of a matrix-valued evaluator along every coordinate.
pub(crate) fn central_differences(
    q: &DVector<f64>,
    f: impl Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
) -> Result<Vec<DMatrix<f64>>> {
    let mut out = Vec::with_capacity(q.len());
    let mut qp = q.clone();
    for d in 0..q.len() {
        let h = fd_step(q[d]);
        qp[d] = q[d] + h;
        let fp = f(&qp)?;
        qp[d] = q[d] - h;
        let fm = f(&qp)?;
        qp[d] = q[d];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}
