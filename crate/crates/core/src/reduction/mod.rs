//! Pointwise reduction geometry: orbit metric, Faddeev-Popov matrix,
//! projectors, mechanical connection, curvature, horizontal metric and its
//! Christoffel symbols, covariant derivatives of the orbit metric and the
//! Christoffel table of the horizontal/vertical frame.
//!
//! Index layouts: derivative indices come last. `curvature[nu][E][P]`,
//! `h_christoffel[A][B][C]`, `dgamma[alpha][beta][E]`,
//! `dgamma_inv[kappa][sigma][E]`.

mod flat;

pub use flat::{flat_terms, FlatTerms};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart_system::ChartSystem;
use crate::error::{Result, WongError};
use crate::lie_algebra::LieAlgebraSpec;
use crate::tensor::{guarded_inverse, scaled_inverse, Tensor3};

/// Everything the reduced equations need at one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionData {
    pub q: DVector<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub killing: DMatrix<f64>,
    pub chi_jac: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub gamma_inv: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub phi_inv: DMatrix<f64>,
    pub p_perp: DMatrix<f64>,
    pub n_proj: DMatrix<f64>,
    pub pi_proj: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub mech_conn: DMatrix<f64>,
    pub curvature: Tensor3,
    pub h_metric: DMatrix<f64>,
    pub h_christoffel: Tensor3,
    pub dgamma: Tensor3,
    pub dgamma_inv: Tensor3,
    /// `C^A_{CD}` as `[A][C][D]`.
    pub nonholo_h: Tensor3,
    /// `C^alpha_{CD}` as `[alpha][C][D]`.
    pub nonholo_v: Tensor3,
}

/// First-order data shared by the derived quantities.
pub(crate) struct Base {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub chi_j: DMatrix<f64>,
    pub dg: Tensor3,
    pub dk: Tensor3,
    pub gamma: DMatrix<f64>,
    pub gamma_inv: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub phi_inv: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub p_perp: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    /// `d_E A` (each `N_G x N_P`).
    pub da: Vec<DMatrix<f64>>,
    /// `d_E gamma`.
    pub dgam: Vec<DMatrix<f64>>,
}

fn gamma_of(g: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    let gamma = k.transpose() * g * k;
    (&gamma + gamma.transpose()) * 0.5
}

pub fn orbit_metric(sys: &ChartSystem, q: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let gamma = gamma_of(&sys.metric(q)?, &sys.killing(q)?);
    let inv = guarded_inverse(&gamma, |cond| WongError::DegenerateOrbit { cond })?;
    Ok((gamma, inv))
}

pub fn fp_matrix(sys: &ChartSystem, q: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (j, k) = (sys.constraint_jac(q)?, sys.killing(q)?);
    let phi = &j * &k;
    let inv = scaled_inverse(&phi, j.norm() * k.norm(), |cond| WongError::GribovHorizon { cond })?;
    Ok((phi, inv))
}

/// Projectors `(P_perp, N, Pi, Lambda)`.
pub struct Projectors {
    pub p_perp: DMatrix<f64>,
    pub n_proj: DMatrix<f64>,
    pub pi_proj: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
}

pub fn projectors(sys: &ChartSystem, q: &DVector<f64>) -> Result<Projectors> {
    let b = Base::first_order(sys, q)?;
    Ok(Projectors {
        p_perp: b.p_perp,
        n_proj: b.n,
        pi_proj: b.pi,
        lambda: b.lambda,
    })
}

pub fn mechanical_connection(sys: &ChartSystem, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let g = sys.metric(q)?;
    let k = sys.killing(q)?;
    let gamma = gamma_of(&g, &k);
    let gamma_inv = guarded_inverse(&gamma, |cond| WongError::DegenerateOrbit { cond })?;
    Ok(gamma_inv * k.transpose() * g)
}

pub fn curvature(sys: &ChartSystem, q: &DVector<f64>) -> Result<Tensor3> {
    Ok(Base::new(sys, q)?.curvature(sys.algebra()))
}

pub fn horizontal_metric_christoffels(sys: &ChartSystem, q: &DVector<f64>) -> Result<(DMatrix<f64>, Tensor3)> {
    let b = Base::new(sys, q)?;
    let gh = b.h_metric();
    let hg = b.h_christoffel();
    Ok((gh, hg))
}

pub fn covariant_derivative_gamma(sys: &ChartSystem, q: &DVector<f64>) -> Result<(Tensor3, Tensor3)> {
    let b = Base::new(sys, q)?;
    Ok((b.dgamma_lower(sys.algebra()), b.dgamma_upper(sys.algebra())))
}

impl ReductionData {
    pub fn compute(sys: &ChartSystem, q: &DVector<f64>) -> Result<Self> {
        let b = Base::new(sys, q)?;
        let alg = sys.algebra();
        let (nonholo_h, nonholo_v) = b.nonholonomic_structure(alg);
        Ok(Self {
            q: q.clone(),
            curvature: b.curvature(alg),
            h_metric: b.h_metric(),
            h_christoffel: b.h_christoffel(),
            dgamma: b.dgamma_lower(alg),
            dgamma_inv: b.dgamma_upper(alg),
            nonholo_h,
            nonholo_v,
            metric: b.g,
            metric_inv: b.g_inv,
            killing: b.k,
            chi_jac: b.chi_j,
            gamma: b.gamma,
            gamma_inv: b.gamma_inv,
            phi: b.phi,
            phi_inv: b.phi_inv,
            p_perp: b.p_perp,
            n_proj: b.n,
            pi_proj: b.pi,
            lambda: b.lambda,
            mech_conn: b.a,
        })
    }

    pub fn n_p(&self) -> usize {
        self.metric.nrows()
    }

    pub fn n_g(&self) -> usize {
        self.gamma.nrows()
    }

    /// Largest deviation among the projector identities
    /// `NN = N, NK = 0, NP = P, PN = N, Pi N = Pi, N Pi = N`, `A K = 1` and
    /// `Pi = 1 - K A`.
    /// `max |K^F_sigma curvature^nu_{EF}|`; zero when the metric is flat.
    pub fn curvature_horizontality(&self) -> f64 {
        let (np, ng) = (self.n_p(), self.n_g());
        let mut worst = 0.0f64;
        for nu in 0..ng {
            for sg in 0..ng {
                for e in 0..np {
                    let s: f64 = (0..np).map(|f| self.killing[(f, sg)] * self.curvature.get(nu, e, f)).sum();
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    pub fn projector_residual(&self) -> f64 {
        let n = &self.n_proj;
        let p = &self.p_perp;
        let pi = &self.pi_proj;
        let id = DMatrix::<f64>::identity(self.n_p(), self.n_p());
        let id_g = DMatrix::<f64>::identity(self.n_g(), self.n_g());
        [
            (n * n - n).amax(),
            (n * &self.killing).amax(),
            (n * p - p).amax(),
            (p * n - n).amax(),
            (pi * n - pi).amax(),
            (n * pi - n).amax(),
            (&self.mech_conn * &self.killing - id_g).amax(),
            (&id - &self.killing * &self.mech_conn - pi).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl Base {
    /// Everything that needs no derivatives.
    pub(crate) fn first_order(sys: &ChartSystem, q: &DVector<f64>) -> Result<Self> {
        let np = sys.n_p();
        let ng = sys.n_g();
        let g = sys.metric(q)?;
        let g_inv = guarded_inverse(&g, |c| WongError::DegenerateMetric(format!("condition number {c:.3e}")))?;
        let k = sys.killing(q)?;
        let chi_j = sys.constraint_jac(q)?;
        if chi_j.shape() != (ng, np) || k.shape() != (np, ng) || g.shape() != (np, np) {
            return Err(WongError::dim("chart evaluators returned inconsistent shapes"));
        }
        let gamma = gamma_of(&g, &k);
        let gamma_inv = guarded_inverse(&gamma, |cond| WongError::DegenerateOrbit { cond })?;
        let phi = &chi_j * &k;
        let phi_inv = scaled_inverse(&phi, chi_j.norm() * k.norm(), |cond| WongError::GribovHorizon { cond })?;
        let lambda = &phi_inv * &chi_j;
        let id = DMatrix::<f64>::identity(np, np);
        let n = &id - &k * &lambda;
        // chi^T = G^-1 chi_J^T gamma; P_perp = 1 - chi^T (chi chi^T)^-1 chi_J
        let chi_t = &g_inv * chi_j.transpose() * &gamma;
        let cct = &chi_j * &chi_t;
        let cct_inv = guarded_inverse(&cct, |cond| WongError::GribovHorizon { cond })?;
        let p_perp = &id - &chi_t * cct_inv * &chi_j;
        let a = &gamma_inv * k.transpose() * &g;
        let pi = &id - &k * &a;
        Ok(Self {
            g,
            g_inv,
            k,
            chi_j,
            dg: Tensor3::zeros(np, np, 0),
            dk: Tensor3::zeros(np, ng, 0),
            gamma,
            gamma_inv,
            phi,
            phi_inv,
            lambda,
            n,
            p_perp,
            a,
            pi,
            da: Vec::new(),
            dgam: Vec::new(),
        })
    }

    pub(crate) fn new(sys: &ChartSystem, q: &DVector<f64>) -> Result<Self> {
        let mut b = Self::first_order(sys, q)?;
        b.dg = sys.metric_deriv(q)?;
        b.dk = sys.killing_deriv(q)?;
        let np = b.g.nrows();
        for e in 0..np {
            let dg = b.dg.slice_last(e);
            let dk = b.dk.slice_last(e);
            let dgam = dk.transpose() * &b.g * &b.k + b.k.transpose() * &dg * &b.k + b.k.transpose() * &b.g * &dk;
            let dgam_inv = -(&b.gamma_inv * &dgam * &b.gamma_inv);
            let da = &dgam_inv * b.k.transpose() * &b.g
                + &b.gamma_inv * dk.transpose() * &b.g
                + &b.gamma_inv * b.k.transpose() * &dg;
            b.dgam.push(dgam);
            b.da.push(da);
        }
        Ok(b)
    }

    pub(crate) fn n_p(&self) -> usize {
        self.g.nrows()
    }

    pub(crate) fn n_g(&self) -> usize {
        self.gamma.nrows()
    }

    pub(crate) fn curvature(&self, alg: &LieAlgebraSpec) -> Tensor3 {
        let (np, ng) = (self.n_p(), self.n_g());
        let c = alg.c();
        // half of the quadratic term on each ordering keeps the result
        // exactly antisymmetric
        let half = Tensor3::from_fn(ng, np, np, |nu, e, p| {
            let mut s = self.da[e][(nu, p)];
            if !alg.is_abelian() {
                for al in 0..ng {
                    for be in 0..ng {
                        s += 0.5 * c.get(nu, al, be) * self.a[(al, e)] * self.a[(be, p)];
                    }
                }
            }
            s
        });
        Tensor3::from_fn(ng, np, np, |nu, e, p| half.get(nu, e, p) - half.get(nu, p, e))
    }

    pub(crate) fn h_metric(&self) -> DMatrix<f64> {
        let gh = self.pi.transpose() * &self.g * &self.pi;
        (&gh + gh.transpose()) * 0.5
    }

    /// `d_E G^H`.
    fn dh_metric(&self) -> Vec<DMatrix<f64>> {
        (0..self.n_p())
            .map(|e| {
                let dk = self.dk.slice_last(e);
                let dpi = -(&dk * &self.a) - &self.k * &self.da[e];
                let dg = self.dg.slice_last(e);
                dpi.transpose() * &self.g * &self.pi
                    + self.pi.transpose() * &dg * &self.pi
                    + self.pi.transpose() * &self.g * &dpi
            })
            .collect()
    }

    /// `^H Gamma^B_{CD} = (N G^-1 N^T)^{BA} [CD, A]`.
    pub(crate) fn h_christoffel(&self) -> Tensor3 {
        let np = self.n_p();
        let dgh = self.dh_metric();
        let first = Tensor3::from_fn(np, np, np, |a, c, d| {
            0.5 * (dgh[d][(a, c)] + dgh[c][(a, d)] - dgh[a][(c, d)])
        });
        let raise = &self.n * &self.g_inv * self.n.transpose();
        let mut out = Tensor3::zeros(np, np, np);
        for b in 0..np {
            for a in 0..np {
                let r = raise[(b, a)];
                if r == 0.0 {
                    continue;
                }
                for c in 0..np {
                    for d in 0..np {
                        out.add_at(b, c, d, r * first.get(a, c, d));
                    }
                }
            }
        }
        out
    }

    /// `D_E gamma_{alpha beta}` as `[alpha][beta][E]`.
    pub(crate) fn dgamma_lower(&self, alg: &LieAlgebraSpec) -> Tensor3 {
        let (np, ng) = (self.n_p(), self.n_g());
        let c = alg.c();
        Tensor3::from_fn(ng, ng, np, |al, be, e| {
            let mut s = self.dgam[e][(al, be)];
            if !alg.is_abelian() {
                for mu in 0..ng {
                    let am = self.a[(mu, e)];
                    for sg in 0..ng {
                        s -= c.get(sg, mu, al) * am * self.gamma[(sg, be)] + c.get(sg, mu, be) * am * self.gamma[(sg, al)];
                    }
                }
            }
            s
        })
    }

    /// `D_E gamma^{kappa sigma}` as `[kappa][sigma][E]`.
    pub(crate) fn dgamma_upper(&self, alg: &LieAlgebraSpec) -> Tensor3 {
        let (np, ng) = (self.n_p(), self.n_g());
        let c = alg.c();
        let dgi: Vec<_> = self.dgam.iter().map(|d| -(&self.gamma_inv * d * &self.gamma_inv)).collect();
        Tensor3::from_fn(ng, ng, np, |ka, sg, e| {
            let mut s = dgi[e][(ka, sg)];
            if !alg.is_abelian() {
                for mu in 0..ng {
                    let am = self.a[(mu, e)];
                    for r in 0..ng {
                        s += c.get(sg, mu, r) * am * self.gamma_inv[(ka, r)] + c.get(ka, mu, r) * am * self.gamma_inv[(r, sg)];
                    }
                }
            }
            s
        })
    }

    /// Structure functions of `[H_C, H_D]`.
    pub(crate) fn nonholonomic_structure(&self, alg: &LieAlgebraSpec) -> (Tensor3, Tensor3) {
        let (np, ng) = (self.n_p(), self.n_g());
        let h = Tensor3::from_fn(np, np, np, |a, cc, d| {
            (0..ng)
                .map(|g| self.lambda[(g, cc)] * self.dk.get(a, g, d) - self.lambda[(g, d)] * self.dk.get(a, g, cc))
                .sum()
        });
        let f = self.curvature(alg);
        let v = Tensor3::from_fn(ng, np, np, |al, cc, d| {
            let mut s = 0.0;
            for sidx in 0..np {
                let ns = self.n[(sidx, cc)];
                if ns == 0.0 {
                    continue;
                }
                for p in 0..np {
                    s -= ns * self.n[(p, d)] * f.get(al, sidx, p);
                }
            }
            s
        });
        (h, v)
    }
}

/// The eight blocks of the Christoffel symbols in the horizontal/vertical
/// frame at the group identity.
#[derive(Clone, Debug, Serialize)]
pub struct NonholonomicTable {
    /// `Gamma^D_{AB}` as `[D][A][B]`.
    pub hhh: Tensor3,
    /// `Gamma^mu_{AB}`.
    pub vhh: Tensor3,
    /// `Gamma^P_{alpha B}`.
    pub hvh: Tensor3,
    /// `Gamma^P_{A beta}`.
    pub hhv: Tensor3,
    /// `Gamma^P_{alpha beta}`.
    pub hvv: Tensor3,
    /// `Gamma^mu_{alpha B}`.
    pub vvh: Tensor3,
    /// `Gamma^mu_{A beta}`.
    pub vhv: Tensor3,
    /// `Gamma^mu_{alpha beta}`.
    pub vvv: Tensor3,
}

pub fn nonholonomic_christoffels(sys: &ChartSystem, q: &DVector<f64>) -> Result<NonholonomicTable> {
    let b = Base::new(sys, q)?;
    let alg = sys.algebra();
    let (np, ng) = (b.n_p(), b.n_g());
    let hg = b.h_christoffel();
    let f = b.curvature(alg);
    let dgl = b.dgamma_lower(alg);
    let c = alg.c();
    let n = &b.n;
    // F_{AB} with both slots projected: NF[mu][A][B] = N^E_A N^F_B F^mu_{EF}
    let nf = Tensor3::from_fn(ng, np, np, |mu, a, bb| {
        let mut s = 0.0;
        for e in 0..np {
            for ff in 0..np {
                s += n[(e, a)] * n[(ff, bb)] * f.get(mu, e, ff);
            }
        }
        s
    });
    let gn = &b.g_inv * n.transpose();
    let hhh = Tensor3::from_fn(np, np, np, |d, a, bb| (0..np).map(|e| n[(e, a)] * hg.get(d, bb, e)).sum());
    let vhh = Tensor3::from_fn(ng, np, np, |mu, a, bb| -0.5 * nf.get(mu, a, bb));
    // G^{PS} N^F_S N^E_B F^mu_{EF} gamma_{mu alpha} = (G^-1 N^T)^{P F'} ...
    let mixed = |p: usize, al: usize, bb: usize| -> f64 {
        let mut s = 0.0;
        for ss in 0..np {
            for mu in 0..ng {
                s += gn[(p, ss)] * nf.get(mu, bb, ss) * b.gamma[(mu, al)];
            }
        }
        0.5 * s
    };
    let hvh = Tensor3::from_fn(np, ng, np, &mixed);
    let hhv = Tensor3::from_fn(np, np, ng, |p, a, be| mixed(p, be, a));
    let hvv = Tensor3::from_fn(np, ng, ng, |p, al, be| {
        -0.5 * (0..np).map(|e| gn[(p, e)] * dgl.get(al, be, e)).sum::<f64>()
    });
    let vert = |mu: usize, al: usize, bb: usize| -> f64 {
        let mut s = 0.0;
        for nu in 0..ng {
            for e in 0..np {
                s += b.gamma_inv[(mu, nu)] * n[(e, bb)] * dgl.get(al, nu, e);
            }
        }
        0.5 * s
    };
    let vvh = Tensor3::from_fn(ng, ng, np, &vert);
    let vhv = Tensor3::from_fn(ng, np, ng, |mu, a, be| vert(mu, be, a));
    let vvv = Tensor3::from_fn(ng, ng, ng, |mu, al, be| {
        let mut s = 0.0;
        for nu in 0..ng {
            let mut inner = 0.0;
            for sg in 0..ng {
                inner += c.get(sg, al, be) * b.gamma[(sg, nu)]
                    - c.get(sg, nu, be) * b.gamma[(al, sg)]
                    - c.get(sg, nu, al) * b.gamma[(be, sg)];
            }
            s += b.gamma_inv[(mu, nu)] * inner;
        }
        0.5 * s
    });
    Ok(NonholonomicTable {
        hhh,
        vhh,
        hvh,
        hhv,
        hvv,
        vvh,
        vhv,
        vvv,
    })
}

/// `|G~^+ G~ - diag(P_perp, 1)|` for the block metric and its pseudoinverse
/// at the group identity.
pub fn pseudoinverse_check(sys: &ChartSystem, q: &DVector<f64>) -> Result<f64> {
    let b = Base::first_order(sys, q)?;
    let (np, ng) = (b.n_p(), b.n_g());
    let (metric, pinv) = block_metric_and_pseudoinverse(&b, &DMatrix::identity(ng, ng));
    let mut target = DMatrix::zeros(np + ng, np + ng);
    target.view_mut((0, 0), (np, np)).copy_from(&b.p_perp);
    for i in 0..ng {
        target[(np + i, np + i)] = 1.0;
    }
    Ok((pinv * metric - target).amax())
}

/// Block metric on `(Q*, a)` and its pseudoinverse, for a right-trivialized
/// group frame `u_bar` (its inverse is taken here).
pub(crate) fn block_metric_and_pseudoinverse(b: &Base, u_bar: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (np, ng) = (b.n_p(), b.n_g());
    let v_bar = u_bar.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(ng, ng));
    let gp = &b.g * &b.p_perp;
    let mut m = DMatrix::zeros(np + ng, np + ng);
    m.view_mut((0, 0), (np, np)).copy_from(&(b.p_perp.transpose() * &gp));
    let off = b.p_perp.transpose() * &b.g * &b.k * u_bar;
    m.view_mut((0, np), (np, ng)).copy_from(&off);
    m.view_mut((np, 0), (ng, np)).copy_from(&off.transpose());
    m.view_mut((np, np), (ng, ng)).copy_from(&(u_bar.transpose() * &b.gamma * u_bar));

    let mut p = DMatrix::zeros(np + ng, np + ng);
    p.view_mut((0, 0), (np, np)).copy_from(&(&b.n * &b.g_inv * b.n.transpose()));
    let qa = &b.n * &b.g_inv * b.lambda.transpose() * v_bar.transpose();
    p.view_mut((0, np), (np, ng)).copy_from(&qa);
    p.view_mut((np, 0), (ng, np)).copy_from(&qa.transpose());
    p.view_mut((np, np), (ng, ng)).copy_from(&(&v_bar * &b.lambda * &b.g_inv * b.lambda.transpose() * v_bar.transpose()));
    (m, p)
}
