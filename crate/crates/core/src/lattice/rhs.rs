//! Horizontal and vertical equations for the lattice field, built from
//! operator compositions.

use nalgebra::DVector;
use serde::Serialize;

use super::{AlgebraField, GaugeField, LatticeTheory, SolverOptions};
use crate::error::{Result, WongError};
use crate::wong::{RhsOptions, WongState};

/// Every term of the field equations, each carrying the sign it enters
/// with. Horizontal terms are already projected with `N`.
#[derive(Clone, Debug, Serialize)]
pub struct YmRhsTerms {
    /// `2 N (v * xi)` and `-N ((D xi) * xi)`.
    pub christoffel: [GaugeField; 2],
    pub curvature_terms: [GaugeField; 6],
    pub gamma_terms: [GaugeField; 2],
    /// Vanishes identically for the linear Coulomb condition.
    pub constraint_curvature: GaugeField,
    /// Connection, extra and momentum terms of `dp`.
    pub vertical: [AlgebraField; 3],
    pub dv: GaugeField,
    pub dp: AlgebraField,
}

impl YmRhsTerms {
    pub fn christoffel_sum(&self) -> GaugeField {
        &self.christoffel[0] + &self.christoffel[1]
    }
}

impl LatticeTheory {
    /// Rejects states off the Coulomb surface or with momentum at the
    /// reference site.
    pub(crate) fn check_state(&self, s: &WongState, opts: &SolverOptions) -> Result<()> {
        self.check_gauge(&s.q_star)?;
        self.check_gauge(&s.v)?;
        self.check_algebra(&s.p)?;
        let h = self.lattice.spacing;
        let ca = self.coulomb_residual(&s.q_star) * h;
        let cv = self.coulomb_residual(&s.v) * h;
        let scale = |f: &DVector<f64>| f.amax().max(1.0);
        if ca > opts.constraint_tol * scale(&s.q_star) {
            return Err(WongError::ConstraintViolated(format!("Coulomb residual of the field is {ca:.3e}")));
        }
        if cv > opts.constraint_tol * scale(&s.v) {
            return Err(WongError::ConstraintViolated(format!("Coulomb residual of the velocity is {cv:.3e}")));
        }
        let ng = self.n_g();
        let p0 = s.p.rows(super::solve::REFERENCE_SITE * ng, ng).amax();
        if p0 != 0.0 {
            return Err(WongError::ConstraintViolated(format!("momentum at the reference site is {p0:.3e}")));
        }
        Ok(())
    }
}

pub fn ym_wong_rhs(th: &LatticeTheory, s: &WongState, rhs: &RhsOptions, opts: &SolverOptions) -> Result<YmRhsTerms> {
    th.check_state(s, opts)?;
    let a = &s.q_star;
    let v = &s.v;
    let p = &s.p;
    let vol = th.lattice.volume_element();

    let xi = th.connection(a, v, opts)?;
    let pi = th.gamma_inv(a, p, opts)?;
    let d_xi = th.d_raw(a, &xi);
    let d_pi = th.d_raw(a, &pi);
    // K gamma^-1 applied to a covector field
    let k_gi = |w: AlgebraField| -> Result<GaugeField> { Ok(th.d_raw(a, &th.gamma_inv(a, &th.restricted(w), opts)?)) };
    let proj = |t: GaugeField| -> Result<GaugeField> { Ok(-th.n_apply(a, &t, opts)?) };

    let christoffel = [proj(th.star(v, &xi) * -2.0)?, proj(th.star(&d_xi, &xi))?];

    let kv = th.k_apply(v);
    let s1 = th.star_t(&d_pi, &kv) * vol;
    let w = th.restricted(th.dt_raw(a, &kv) * vol);
    let mut f = [
        proj(k_gi(s1)? * 2.0)?,
        proj(k_gi(-th.coad(&pi, &w))?)?,
        proj(th.star(v, &pi) * 2.0)?,
        proj(th.star(&d_pi, &xi) * -2.0)?,
        proj(-th.d_raw(a, &th.bracket(&xi, &pi)))?,
        proj(k_gi(th.coad(&xi, p))?)?,
    ];
    for (t, flip) in f.iter_mut().zip(rhs.flip_curvature_terms) {
        if flip {
            *t = -&*t;
        }
    }
    let m = -th.coad(&pi, p);
    let gamma_terms = [proj(th.star(&d_pi, &pi))?, proj(k_gi(m)?)?];
    let constraint_curvature = th.gauge_zeros();

    let t1 = th.restricted(th.coad(&xi, p));
    let t2 = th.gamma_apply(a, &th.bracket(&xi, &pi));
    let t3 = th.restricted(-th.coad(&pi, p));

    let mut dv = &christoffel[0] + &christoffel[1];
    for t in f.iter().chain(gamma_terms.iter()) {
        dv += t;
    }
    let dp = if th.algebra().is_abelian() {
        th.algebra_zeros()
    } else if rhs.extra_vertical_term {
        &t1 + &t2 + &t3
    } else {
        &t1 + &t3
    };
    Ok(YmRhsTerms {
        christoffel,
        curvature_terms: f,
        gamma_terms,
        constraint_curvature,
        vertical: [t1, t2, t3],
        dv,
        dp,
    })
}
