//! Coulomb-gauge Yang-Mills on a periodic spatial lattice.
//!
//! Gauge fields `A^mu_i(x)` live on sites and are stored flat with index
//! `(x * d + i) * n_g + mu`; algebra fields `eps^mu(x)` use `x * n_g + mu`.
//! Gradients are forward differences and the divergence is the backward
//! difference, so `div = -grad^T` exactly.

mod bridge;
mod integrate;
mod rhs;
mod solve;
#[cfg(test)]
mod tests;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WongError};
use crate::lie_algebra::LieAlgebraSpec;

pub use bridge::{bridge_discrepancy, to_chart_system, BridgeGroup, BridgeReport, BRIDGE_MAX_NP};
pub use integrate::{read_snapshot, write_snapshot, write_ym_csv, ym_energy, ym_integrate, Snapshot, YmDiagnostics, YmOptions, YmTrajectory};
pub use rhs::{ym_wong_rhs, YmRhsTerms};
pub use solve::{SolverOptions, ZeroModes};

/// A gauge field `A^mu_i(x)`.
pub type GaugeField = DVector<f64>;
/// An algebra-valued site field `eps^mu(x)` (gauge parameters or momenta).
pub type AlgebraField = DVector<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub d: usize,
    pub extent: usize,
    pub spacing: f64,
    #[serde(skip)]
    fwd: Vec<usize>,
    #[serde(skip)]
    bwd: Vec<usize>,
}

impl Lattice {
    pub fn new(d: usize, extent: usize, spacing: f64) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(WongError::Config(format!("lattice dimension must be 2 or 3, got {d}")));
        }
        if extent < 2 {
            return Err(WongError::Config(format!("lattice extent must be at least 2, got {extent}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(WongError::Config(format!("lattice spacing must be positive, got {spacing}")));
        }
        let n = extent.pow(d as u32);
        let mut fwd = vec![0; n * d];
        let mut bwd = vec![0; n * d];
        for x in 0..n {
            for i in 0..d {
                let stride = extent.pow(i as u32);
                let ni = (x / stride) % extent;
                let up = (ni + 1) % extent;
                let down = (ni + extent - 1) % extent;
                fwd[x * d + i] = x + up * stride - ni * stride;
                bwd[x * d + i] = x + down * stride - ni * stride;
            }
        }
        Ok(Self {
            d,
            extent,
            spacing,
            fwd,
            bwd,
        })
    }

    pub fn sites(&self) -> usize {
        self.extent.pow(self.d as u32)
    }

    /// `h^d`, the measure of one cell.
    pub fn volume_element(&self) -> f64 {
        self.spacing.powi(self.d as i32)
    }

    /// Site index of integer coordinates.
    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.extent + c % self.extent)
    }

    pub fn coords(&self, x: usize) -> Vec<usize> {
        (0..self.d).map(|i| (x / self.extent.pow(i as u32)) % self.extent).collect()
    }

    pub fn forward(&self, x: usize, i: usize) -> usize {
        self.fwd[x * self.d + i]
    }

    pub fn backward(&self, x: usize, i: usize) -> usize {
        self.bwd[x * self.d + i]
    }
}

/// A lattice together with the gauge algebra.
#[derive(Clone, Debug)]
pub struct LatticeTheory {
    pub lattice: Lattice,
    algebra: Arc<LieAlgebraSpec>,
    abelian: bool,
}

impl LatticeTheory {
    pub fn new(lattice: Lattice, algebra: LieAlgebraSpec) -> Self {
        let abelian = algebra.is_abelian();
        Self {
            lattice,
            algebra: Arc::new(algebra),
            abelian,
        }
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn n_g(&self) -> usize {
        self.algebra.dim()
    }

    pub fn gauge_len(&self) -> usize {
        self.lattice.sites() * self.lattice.d * self.n_g()
    }

    pub fn algebra_len(&self) -> usize {
        self.lattice.sites() * self.n_g()
    }

    pub fn gauge_zeros(&self) -> GaugeField {
        DVector::zeros(self.gauge_len())
    }

    pub fn algebra_zeros(&self) -> AlgebraField {
        DVector::zeros(self.algebra_len())
    }

    fn check(&self, f: &DVector<f64>, len: usize, what: &str) -> Result<()> {
        if f.len() != len {
            return Err(WongError::ShapeMismatch(format!("{what} has length {}, expected {len}", f.len())));
        }
        Ok(())
    }

    pub fn check_gauge(&self, a: &GaugeField) -> Result<()> {
        self.check(a, self.gauge_len(), "gauge field")
    }

    pub fn check_algebra(&self, e: &AlgebraField) -> Result<()> {
        self.check(e, self.algebra_len(), "algebra field")
    }

    #[inline]
    fn gi(&self, x: usize, i: usize) -> usize {
        (x * self.lattice.d + i) * self.n_g()
    }

    /// Backward-difference divergence `sum_i (A_i(x) - A_i(x - e_i)) / h`.
    pub fn divergence(&self, a: &GaugeField) -> Result<AlgebraField> {
        self.check_gauge(a)?;
        Ok(self.div_raw(a))
    }

    fn div_raw(&self, a: &GaugeField) -> AlgebraField {
        let (lat, ng) = (&self.lattice, self.n_g());
        let inv_h = 1.0 / lat.spacing;
        let mut out = self.algebra_zeros();
        for x in 0..lat.sites() {
            for i in 0..lat.d {
                let (here, back) = (self.gi(x, i), self.gi(lat.backward(x, i), i));
                for m in 0..ng {
                    out[x * ng + m] += (a[here + m] - a[back + m]) * inv_h;
                }
            }
        }
        out
    }

    /// Forward-difference gradient, the negative transpose of
    /// [`Self::divergence`].
    pub fn gradient(&self, e: &AlgebraField) -> Result<GaugeField> {
        self.check_algebra(e)?;
        Ok(self.grad_raw(e))
    }

    fn grad_raw(&self, e: &AlgebraField) -> GaugeField {
        let (lat, ng) = (&self.lattice, self.n_g());
        let inv_h = 1.0 / lat.spacing;
        let mut out = self.gauge_zeros();
        for x in 0..lat.sites() {
            for i in 0..lat.d {
                let (o, f) = (self.gi(x, i), lat.forward(x, i) * ng);
                for m in 0..ng {
                    out[o + m] = (e[f + m] - e[x * ng + m]) * inv_h;
                }
            }
        }
        out
    }

    /// Pointwise `(w * eps)^mu_i(x) = c^mu_{nu alpha} w^nu_i(x) eps^alpha(x)`.
    pub(crate) fn star(&self, w: &GaugeField, e: &AlgebraField) -> GaugeField {
        let mut out = self.gauge_zeros();
        if self.abelian {
            return out;
        }
        let (lat, ng, c) = (&self.lattice, self.n_g(), self.algebra.c());
        for x in 0..lat.sites() {
            let ex = &e.as_slice()[x * ng..(x + 1) * ng];
            for i in 0..lat.d {
                let o = self.gi(x, i);
                for m in 0..ng {
                    let mut s = 0.0;
                    for n in 0..ng {
                        let wn = w[o + n];
                        if wn == 0.0 {
                            continue;
                        }
                        for (al, ea) in ex.iter().enumerate() {
                            s += c.get(m, n, al) * wn * ea;
                        }
                    }
                    out[o + m] = s;
                }
            }
        }
        out
    }

    /// Transpose of `eps -> w * eps`:
    /// `sum_i c^rho_{nu alpha} w^nu_i(x) eta_rho,i(x)`.
    pub(crate) fn star_t(&self, w: &GaugeField, eta: &GaugeField) -> AlgebraField {
        let mut out = self.algebra_zeros();
        if self.abelian {
            return out;
        }
        let (lat, ng, c) = (&self.lattice, self.n_g(), self.algebra.c());
        for x in 0..lat.sites() {
            for i in 0..lat.d {
                let o = self.gi(x, i);
                for al in 0..ng {
                    let mut s = 0.0;
                    for r in 0..ng {
                        for n in 0..ng {
                            s += c.get(r, n, al) * w[o + n] * eta[o + r];
                        }
                    }
                    out[x * ng + al] += s;
                }
            }
        }
        out
    }

    /// Pointwise bracket `[e, f]^s(x) = c^s_{ab} e^a(x) f^b(x)`.
    pub(crate) fn bracket(&self, e: &AlgebraField, f: &AlgebraField) -> AlgebraField {
        let mut out = self.algebra_zeros();
        if self.abelian {
            return out;
        }
        let (ng, c) = (self.n_g(), self.algebra.c());
        for x in 0..self.lattice.sites() {
            for s in 0..ng {
                let mut acc = 0.0;
                for a in 0..ng {
                    for b in 0..ng {
                        acc += c.get(s, a, b) * e[x * ng + a] * f[x * ng + b];
                    }
                }
                out[x * ng + s] = acc;
            }
        }
        out
    }

    /// Pointwise coadjoint-type contraction
    /// `out_o(x) = c^s_{a o} e^a(x) w_s(x)`.
    pub(crate) fn coad(&self, e: &AlgebraField, w: &AlgebraField) -> AlgebraField {
        let mut out = self.algebra_zeros();
        if self.abelian {
            return out;
        }
        let (ng, c) = (self.n_g(), self.algebra.c());
        for x in 0..self.lattice.sites() {
            for o in 0..ng {
                let mut acc = 0.0;
                for s in 0..ng {
                    for a in 0..ng {
                        acc += c.get(s, a, o) * e[x * ng + a] * w[x * ng + s];
                    }
                }
                out[x * ng + o] = acc;
            }
        }
        out
    }

    /// `k` applied at every link.
    pub(crate) fn k_apply(&self, w: &GaugeField) -> GaugeField {
        let ng = self.n_g();
        let k = self.algebra.k();
        let mut out = self.gauge_zeros();
        for link in 0..self.lattice.sites() * self.lattice.d {
            let o = link * ng;
            let blk = w.rows(o, ng);
            out.rows_mut(o, ng).copy_from(&(k * blk));
        }
        out
    }

    /// `(D eps)^mu_i = grad_i eps^mu + c^mu_{nu alpha} A^nu_i eps^alpha`.
    pub fn covariant_derivative(&self, a: &GaugeField, e: &AlgebraField) -> Result<GaugeField> {
        self.check_gauge(a)?;
        self.check_algebra(e)?;
        Ok(self.d_raw(a, e))
    }

    pub(crate) fn d_raw(&self, a: &GaugeField, e: &AlgebraField) -> GaugeField {
        let g = self.grad_raw(e);
        if self.abelian {
            return g;
        }
        g + self.star(a, e)
    }

    /// Plain transpose of `D`: `-div eta + (A*)^T eta`.
    pub(crate) fn dt_raw(&self, a: &GaugeField, eta: &GaugeField) -> AlgebraField {
        let m = -self.div_raw(eta);
        if self.abelian {
            return m;
        }
        m + self.star_t(a, eta)
    }

    /// `D^dagger eta = D^T (k eta)`, the adjoint of `D` with the `k` inner
    /// product on gauge fields and the flat one on algebra fields.
    pub fn covariant_adjoint(&self, a: &GaugeField, eta: &GaugeField) -> Result<AlgebraField> {
        self.check_gauge(a)?;
        self.check_gauge(eta)?;
        Ok(self.dt_raw(a, &self.k_apply(eta)))
    }

    /// Faddeev-Popov operator `div D`.
    pub fn fp_apply(&self, a: &GaugeField, e: &AlgebraField) -> Result<AlgebraField> {
        Ok(self.div_raw(&self.covariant_derivative(a, e)?))
    }

    /// Orbit operator `D^dagger D`.
    pub fn orbit_apply(&self, a: &GaugeField, e: &AlgebraField) -> Result<AlgebraField> {
        self.check_gauge(a)?;
        self.check_algebra(e)?;
        Ok(self.orbit_raw(a, e))
    }

    pub(crate) fn orbit_raw(&self, a: &GaugeField, e: &AlgebraField) -> AlgebraField {
        self.dt_raw(a, &self.k_apply(&self.d_raw(a, e)))
    }

    /// `<u, w>_G = h^d sum u k w`.
    pub fn gauge_inner(&self, u: &GaugeField, w: &GaugeField) -> f64 {
        self.lattice.volume_element() * u.dot(&self.k_apply(w))
    }

    /// Constant algebra fields annihilated by `D` at `a`, as orthonormal
    /// columns.
    pub fn constant_kernel(&self, a: &GaugeField, tol: f64) -> DMatrix<f64> {
        let ng = self.n_g();
        let basis = |al: usize| DVector::from_fn(self.algebra_len(), |j, _| if j % ng == al { 1.0 } else { 0.0 });
        let cols: Vec<GaugeField> = (0..ng).map(|al| self.star(a, &basis(al))).collect();
        let m = DMatrix::from_columns(&cols);
        let scale = m.amax().max(1.0);
        let svd = m.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let kernel: Vec<DVector<f64>> = (0..ng)
            .filter(|&al| svd.singular_values[al] <= tol * scale)
            .map(|al| vt.row(al).transpose())
            .collect();
        let norm = (self.lattice.sites() as f64).sqrt();
        let cols: Vec<AlgebraField> = kernel
            .iter()
            .map(|dir| DVector::from_fn(self.algebra_len(), |j, _| dir[j % ng] / norm))
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(self.algebra_len(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}
