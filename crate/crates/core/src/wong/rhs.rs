use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::WongState;
use crate::chart_system::ChartSystem;
use crate::error::Result;
use crate::lie_algebra::LieAlgebraSpec;
use crate::reduction::{flat_terms, Base};
use crate::tensor::Tensor3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhsOptions {
    /// Add `c^k_{mn} A^m_E gamma^{n n'} p_n' gamma_{s k} v^E` to the momentum
    /// equation.
    pub extra_vertical_term: bool,
    /// Use the Killing-field expansion (flat metrics only).
    pub flat_path: bool,
    /// Flip the sign of individual curvature pieces of the flat expansion.
    pub flip_curvature_terms: [bool; 6],
}

/// Individual contributions to `(dv, dp)`; `dv` pieces are already
/// projected with `N`.
#[derive(Clone, Debug, Serialize)]
pub struct RhsTerms {
    pub christoffel: DVector<f64>,
    pub curvature: DVector<f64>,
    pub gamma_gradient: DVector<f64>,
    /// `-K Phi^-1 chi''(v, v)`.
    pub constraint_curvature: DVector<f64>,
    pub dp_connection: DVector<f64>,
    pub dp_extra: DVector<f64>,
    pub dp_momentum: DVector<f64>,
    pub dv: DVector<f64>,
    pub dp: DVector<f64>,
}

/// Flat-path right-hand side with every expansion piece exposed (each
/// projected with `N` and carrying the sign it enters `dv` with).
#[derive(Clone, Debug, Serialize)]
pub struct FlatRhs {
    pub christoffel: DVector<f64>,
    pub curvature_terms: [DVector<f64>; 6],
    pub gamma_terms: [DVector<f64>; 2],
    pub constraint_curvature: DVector<f64>,
    pub dv: DVector<f64>,
    pub dp: DVector<f64>,
}

pub fn wong_rhs(sys: &ChartSystem, s: &WongState, opts: &RhsOptions) -> Result<(DVector<f64>, DVector<f64>)> {
    if opts.flat_path {
        let f = wong_rhs_flat(sys, s, opts)?;
        return Ok((f.dv, f.dp));
    }
    let t = wong_rhs_terms(sys, s, opts)?;
    Ok((t.dv, t.dp))
}

fn constraint_correction(sys: &ChartSystem, b: &Base, s: &WongState) -> Result<DVector<f64>> {
    let h = sys.constraint_hessian(&s.q_star)?;
    let second = h.contract_last_two(&s.v, &s.v);
    Ok(-(&b.k * (&b.phi_inv * second)))
}

pub fn wong_rhs_terms(sys: &ChartSystem, s: &WongState, opts: &RhsOptions) -> Result<RhsTerms> {
    s.check_dims(sys)?;
    let b = Base::new(sys, &s.q_star)?;
    let alg = sys.algebra();
    let (np, ng) = (b.n_p(), b.n_g());
    let v = &s.v;
    let p = &s.p;

    let christoffel = -b.h_christoffel().contract_last_two(v, v);
    let f = b.curvature(alg);
    let mut w = DVector::zeros(np);
    for nu in 0..ng {
        for e in 0..np {
            let ve = v[e] * p[nu];
            if ve == 0.0 {
                continue;
            }
            for sidx in 0..np {
                w[sidx] += f.get(nu, e, sidx) * ve;
            }
        }
    }
    let raise = &b.n * &b.g_inv * b.n.transpose();
    let curvature = -(&raise * w);
    let dgi = b.dgamma_upper(alg);
    let y = DVector::from_fn(np, |e, _| {
        let mut acc = 0.0;
        for k in 0..ng {
            for l in 0..ng {
                acc += dgi.get(k, l, e) * p[k] * p[l];
            }
        }
        acc
    });
    let gamma_gradient = -0.5 * (&raise * y);
    let constraint_curvature = constraint_correction(sys, &b, s)?;
    let dv = &christoffel + &curvature + &gamma_gradient + &constraint_curvature;

    let (dp_connection, dp_extra, dp_momentum) = vertical_terms(alg, &b.a, &b.gamma, &b.gamma_inv, v, p);
    let dp = vertical_sum(alg, &dp_connection, &dp_extra, &dp_momentum, opts);
    Ok(RhsTerms {
        christoffel,
        curvature,
        gamma_gradient,
        constraint_curvature,
        dp_connection,
        dp_extra,
        dp_momentum,
        dv,
        dp,
    })
}

fn vertical_sum(alg: &LieAlgebraSpec, t1: &DVector<f64>, t2: &DVector<f64>, t3: &DVector<f64>, opts: &RhsOptions) -> DVector<f64> {
    if alg.is_abelian() {
        return DVector::zeros(t1.len());
    }
    let mut dp = t1 + t3;
    if opts.extra_vertical_term {
        dp += t2;
    }
    dp
}

/// The three momentum-equation terms, each on the right-hand side of
/// `dp/dt = ...`.
pub(crate) fn vertical_terms(
    alg: &LieAlgebraSpec,
    a: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    gamma_inv: &DMatrix<f64>,
    v: &DVector<f64>,
    p: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let ng = p.len();
    if alg.is_abelian() {
        return (DVector::zeros(ng), DVector::zeros(ng), DVector::zeros(ng));
    }
    let c = alg.c();
    let xi = a * v;
    let pi = gamma_inv * p;
    let mut t1 = DVector::zeros(ng);
    let mut t2 = DVector::zeros(ng);
    let mut t3 = DVector::zeros(ng);
    for sg in 0..ng {
        for k in 0..ng {
            for mu in 0..ng {
                t1[sg] += c.get(k, mu, sg) * xi[mu] * p[k];
                t3[sg] += c.get(mu, sg, k) * pi[k] * p[mu];
                for nu in 0..ng {
                    t2[sg] += c.get(k, mu, nu) * xi[mu] * pi[nu] * gamma[(sg, k)];
                }
            }
        }
    }
    (t1, t2, t3)
}

pub fn wong_rhs_flat(sys: &ChartSystem, s: &WongState, opts: &RhsOptions) -> Result<FlatRhs> {
    s.check_dims(sys)?;
    let ft = flat_terms(sys, &s.q_star)?;
    let b = Base::first_order(sys, &s.q_star)?;
    let alg = sys.algebra();
    let n = &b.n;
    let v = &s.v;
    let p = &s.p;
    let proj = |t: &Tensor3, x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> { -(n * t.contract_last_two(x, y)) };
    let christoffel = proj(&ft.h_christoffel, v, v);
    let curvature_terms: [DVector<f64>; 6] = std::array::from_fn(|i| {
        let t = proj(&ft.curvature_terms[i], p, v);
        if opts.flip_curvature_terms[i] {
            -t
        } else {
            t
        }
    });
    let gamma_terms: [DVector<f64>; 2] = std::array::from_fn(|i| proj(&ft.gamma_terms[i], p, p));
    let constraint_curvature = constraint_correction(sys, &b, s)?;
    let mut dv = &christoffel + &constraint_curvature;
    for t in curvature_terms.iter().chain(gamma_terms.iter()) {
        dv += t;
    }
    let (t1, t2, t3) = vertical_terms(alg, &b.a, &b.gamma, &b.gamma_inv, v, p);
    let dp = vertical_sum(alg, &t1, &t2, &t3, opts);
    Ok(FlatRhs {
        christoffel,
        curvature_terms,
        gamma_terms,
        constraint_curvature,
        dv,
        dp,
    })
}
