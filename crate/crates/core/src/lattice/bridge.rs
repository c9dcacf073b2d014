//! The lattice theory flattened into a finite-dimensional chart.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::solve::REFERENCE_SITE;
use super::{LatticeTheory, SolverOptions};
use crate::chart_system::{ChartModel, ChartSystem};
use crate::error::{Result, WongError};
use crate::tensor::Tensor3;
use crate::wong::{wong_rhs_flat, RhsOptions, WongState};

/// Largest `N_P` [`to_chart_system`] will materialize; the generic
/// pipeline holds several dense `N_P^3` tensors.
pub const BRIDGE_MAX_NP: usize = 300;

struct LatticeChart {
    th: LatticeTheory,
    /// Sites whose gauge parameters are generators.
    sites: Vec<usize>,
}

impl LatticeChart {
    fn n_g_sites(&self) -> usize {
        self.sites.len() * self.th.n_g()
    }

    fn compress(&self, f: &DVector<f64>) -> DVector<f64> {
        let ng = self.th.n_g();
        DVector::from_fn(self.n_g_sites(), |j, _| f[self.sites[j / ng] * ng + j % ng])
    }

    fn basis(&self, j: usize) -> DVector<f64> {
        let ng = self.th.n_g();
        let mut e = self.th.algebra_zeros();
        e[self.sites[j / ng] * ng + j % ng] = 1.0;
        e
    }
}

impl ChartModel for LatticeChart {
    fn n_p(&self) -> usize {
        self.th.gauge_len()
    }

    fn n_g(&self) -> usize {
        self.n_g_sites()
    }

    fn metric(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let ng = self.th.n_g();
        let k = self.th.algebra().k();
        let vol = self.th.lattice.volume_element();
        let n = self.n_p();
        Ok(DMatrix::from_fn(n, n, |r, c| if r / ng == c / ng { vol * k[(r % ng, c % ng)] } else { 0.0 }))
    }

    fn metric_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let n = self.n_p();
        Some(Ok(Tensor3::zeros(n, n, n)))
    }

    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.th.check_gauge(q)?;
        let cols: Vec<DVector<f64>> = (0..self.n_g_sites()).map(|j| self.th.d_raw(q, &self.basis(j))).collect();
        Ok(DMatrix::from_columns(&cols))
    }

    fn killing_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let th = &self.th;
        let (ng, d) = (th.n_g(), th.lattice.d);
        let c = th.algebra().c();
        let n = self.n_p();
        let mut t = Tensor3::zeros(n, self.n_g_sites(), n);
        for (si, &x) in self.sites.iter().enumerate() {
            for i in 0..d {
                let o = (x * d + i) * ng;
                for m in 0..ng {
                    for al in 0..ng {
                        for nu in 0..ng {
                            let v = c.get(m, nu, al);
                            if v != 0.0 {
                                t.set(o + m, si * ng + al, o + nu, v);
                            }
                        }
                    }
                }
            }
        }
        Some(Ok(t))
    }

    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.compress(&self.th.divergence(q)?))
    }

    fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        // div is linear: its rows are minus gradients of site deltas
        let rows: Vec<DVector<f64>> = (0..self.n_g_sites()).map(|j| -self.th.grad_raw(&self.basis(j))).collect();
        Ok(DMatrix::from_columns(&rows).transpose())
    }

    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let n = self.n_p();
        Some(Ok(Tensor3::zeros(self.n_g_sites(), n, n)))
    }
}

/// Which gauge transformations become Killing fields of the flattened
/// chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BridgeGroup {
    /// Transformations trivial at the reference site, paired with the
    /// divergence at the remaining sites. This is the group the field
    /// equations are reduced by.
    Restricted,
    /// Every site; the divergence then has redundant rows.
    Full,
}

pub fn to_chart_system(th: &LatticeTheory, group: BridgeGroup) -> Result<ChartSystem> {
    let n_p = th.gauge_len();
    if n_p > BRIDGE_MAX_NP {
        return Err(WongError::TooLarge(n_p));
    }
    let sites: Vec<usize> = match group {
        BridgeGroup::Restricted => (0..th.lattice.sites()).filter(|&x| x != REFERENCE_SITE).collect(),
        BridgeGroup::Full => (0..th.lattice.sites()).collect(),
    };
    let algebra = th.algebra().direct_sum(sites.len(), th.lattice.volume_element());
    let name = format!("lattice_{}_d{}_L{}", th.algebra().name(), th.lattice.d, th.lattice.extent);
    ChartSystem::new(name, algebra, Arc::new(LatticeChart { th: th.clone(), sites }), true)
}

impl LatticeTheory {
    /// Drops the reference-site entries of an algebra field.
    pub fn compress_restricted(&self, f: &DVector<f64>) -> DVector<f64> {
        let ng = self.n_g();
        let skip = REFERENCE_SITE * ng;
        DVector::from_fn(f.len() - ng, |j, _| if j < skip { f[j] } else { f[j + ng] })
    }

    /// Inverse of [`Self::compress_restricted`], with zeros at the
    /// reference site.
    pub fn expand_restricted(&self, f: &DVector<f64>) -> DVector<f64> {
        let ng = self.n_g();
        let skip = REFERENCE_SITE * ng;
        DVector::from_fn(f.len() + ng, |j, _| {
            if j < skip {
                f[j]
            } else if j < skip + ng {
                0.0
            } else {
                f[j - ng]
            }
        })
    }
}

/// Largest entrywise differences between [`super::ym_wong_rhs`] and the
/// generic flat pipeline on the flattened system, per group of terms.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BridgeReport {
    pub christoffel: f64,
    pub curvature: [f64; 6],
    pub gamma: [f64; 2],
    pub constraint_curvature: f64,
    pub dv: f64,
    pub dp: f64,
}

impl BridgeReport {
    pub fn max(&self) -> f64 {
        self.curvature
            .iter()
            .chain(&self.gamma)
            .chain([&self.christoffel, &self.constraint_curvature, &self.dv, &self.dp])
            .fold(0.0, |m, &x| m.max(x))
    }

    pub fn merge(&mut self, o: &BridgeReport) {
        let up = |a: &mut f64, b: f64| *a = a.max(b);
        up(&mut self.christoffel, o.christoffel);
        for i in 0..6 {
            up(&mut self.curvature[i], o.curvature[i]);
        }
        for i in 0..2 {
            up(&mut self.gamma[i], o.gamma[i]);
        }
        up(&mut self.constraint_curvature, o.constraint_curvature);
        up(&mut self.dv, o.dv);
        up(&mut self.dp, o.dp);
    }
}

/// Compares both right-hand sides at a reduced lattice state; `sys` must come
/// from `to_chart_system(th, BridgeGroup::Restricted)`.
pub fn bridge_discrepancy(th: &LatticeTheory, sys: &ChartSystem, s: &WongState, rhs: &RhsOptions, opts: &SolverOptions) -> Result<BridgeReport> {
    let r = super::ym_wong_rhs(th, s, rhs, opts)?;
    let flat = WongState::new(s.q_star.clone(), s.v.clone(), th.compress_restricted(&s.p));
    let g = wong_rhs_flat(sys, &flat, rhs)?;
    let diff = |a: &DVector<f64>, b: &DVector<f64>| (a - b).amax();
    Ok(BridgeReport {
        christoffel: diff(&r.christoffel_sum(), &g.christoffel),
        curvature: std::array::from_fn(|i| diff(&r.curvature_terms[i], &g.curvature_terms[i])),
        gamma: std::array::from_fn(|i| diff(&r.gamma_terms[i], &g.gamma_terms[i])),
        constraint_curvature: diff(&r.constraint_curvature, &g.constraint_curvature),
        dv: diff(&r.dv, &g.dv),
        dp: diff(&th.compress_restricted(&r.dp), &g.dp),
    })
}
