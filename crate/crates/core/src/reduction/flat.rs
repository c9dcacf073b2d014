//! Closed forms valid when the metric is the constant identity: the
//! Killing-field expansions of the curvature term, the horizontal
//! Christoffel symbols and the orbit-metric gradient term.

use nalgebra::DVector;
use serde::Serialize;

use super::Base;
use crate::chart_system::ChartSystem;
use crate::error::{Result, WongError};
use crate::tensor::Tensor3;

#[derive(Clone, Debug, Serialize)]
pub struct FlatTerms {
    /// `^H Gamma^A_{BC}` as `[A][B][C]`.
    pub h_christoffel: Tensor3,
    /// The six pieces of `G^{AS} F^nu_{ES}` as `[A][nu][E]`.
    pub curvature_terms: [Tensor3; 6],
    /// `-2 Gamma^nu_{kappa sigma} gamma^{sigma phi} A^kappa_E K^A_phi` with the
    /// orbit Christoffel symbols; equals piece 5 minus pieces 2 and 6.
    pub regrouped: Tensor3,
    /// The two pieces of `1/2 G^{AE} D_E gamma^{kappa sigma}` as
    /// `[A][kappa][sigma]`.
    pub gamma_terms: [Tensor3; 2],
}

impl FlatTerms {
    /// `sum_i curvature_terms[i]`.
    pub fn curvature_sum(&self) -> Tensor3 {
        sum(&self.curvature_terms)
    }

    pub fn gamma_sum(&self) -> Tensor3 {
        sum(&self.gamma_terms)
    }
}

fn sum(ts: &[Tensor3]) -> Tensor3 {
    let [a, b, c] = ts[0].dims();
    Tensor3::from_fn(a, b, c, |i, j, k| ts.iter().map(|t| t.get(i, j, k)).sum())
}

pub fn flat_terms(sys: &ChartSystem, q: &DVector<f64>) -> Result<FlatTerms> {
    if !sys.is_flat() {
        return Err(WongError::NotFlat);
    }
    let b = Base::new(sys, q)?;
    let alg = sys.algebra();
    let c = alg.c();
    let (np, ng) = (b.n_p(), b.n_g());
    let k = &b.k;
    let a = &b.a;
    let gi = &b.gamma_inv;
    // T^A_{nu beta} = K^M_nu K^A_{beta M}
    let t = Tensor3::from_fn(np, ng, ng, |aa, nu, be| (0..np).map(|m| k[(m, nu)] * b.dk.get(aa, be, m)).sum());
    let kgi = k * gi; // (K gamma^-1)^{A mu}
    let gk = &b.g * k; // G_{RE} K^R_sigma as [E][sigma]
    // (K^B_eps K^R_{mu B}) G_{RE} = sum_R T^R_{eps mu} G_{RE}
    let tg = Tensor3::from_fn(ng, ng, np, |eps, mu, e| (0..np).map(|r| t.get(r, eps, mu) * b.g[(r, e)]).sum());

    let h_christoffel = Tensor3::from_fn(np, np, np, |aa, bb, cc| {
        let mut s = 0.0;
        for be in 0..ng {
            s -= a[(be, bb)] * b.dk.get(aa, be, cc) + a[(be, cc)] * b.dk.get(aa, be, bb);
            for nu in 0..ng {
                s += 0.5 * t.get(aa, nu, be) * (a[(nu, bb)] * a[(be, cc)] + a[(nu, cc)] * a[(be, bb)]);
            }
        }
        s
    });

    let f1 = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for eps in 0..ng {
            for mu in 0..ng {
                s += gi[(nu, eps)] * tg.get(eps, mu, e) * kgi[(aa, mu)];
            }
        }
        2.0 * s
    });
    let f2 = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for sg in 0..ng {
            for mu in 0..ng {
                for eps in 0..ng {
                    s += c.get(sg, mu, eps) * gi[(nu, eps)] * gk[(e, sg)] * kgi[(aa, mu)];
                }
            }
        }
        s
    });
    let f3 = Tensor3::from_fn(np, ng, np, |aa, nu, e| 2.0 * (0..ng).map(|mu| gi[(nu, mu)] * b.dk.get(aa, mu, e)).sum::<f64>());
    let f4 = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for eps in 0..ng {
            for mu in 0..ng {
                s += gi[(nu, eps)] * t.get(aa, eps, mu) * a[(mu, e)];
            }
        }
        -2.0 * s
    });
    let f5 = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for sg in 0..ng {
            for mu in 0..ng {
                for eps in 0..ng {
                    s += c.get(sg, mu, eps) * gi[(nu, eps)] * a[(mu, e)] * k[(aa, sg)];
                }
            }
        }
        -s
    });
    let f6 = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for be in 0..ng {
            for sg in 0..ng {
                s += c.get(nu, be, sg) * a[(be, e)] * kgi[(aa, sg)];
            }
        }
        s
    });

    // orbit Christoffel symbols
    let og = Tensor3::from_fn(ng, ng, ng, |nu, al, be| {
        let mut s = c.get(nu, al, be);
        for eps in 0..ng {
            for sg in 0..ng {
                s -= gi[(nu, eps)] * (c.get(sg, eps, al) * b.gamma[(sg, be)] + c.get(sg, eps, be) * b.gamma[(sg, al)]);
            }
        }
        0.5 * s
    });
    let regrouped = Tensor3::from_fn(np, ng, np, |aa, nu, e| {
        let mut s = 0.0;
        for ka in 0..ng {
            for sg in 0..ng {
                s += og.get(nu, ka, sg) * a[(ka, e)] * kgi[(aa, sg)];
            }
        }
        -2.0 * s
    });

    let g1 = Tensor3::from_fn(np, ng, ng, |aa, ka, sg| {
        let mut s = 0.0;
        for mu in 0..ng {
            for be in 0..ng {
                s += t.get(aa, mu, be) * gi[(mu, ka)] * gi[(be, sg)];
            }
        }
        s
    });
    let g2 = Tensor3::from_fn(np, ng, ng, |aa, ka, sg| {
        let mut s = 0.0;
        for be in 0..ng {
            for nu in 0..ng {
                s += c.get(ka, be, nu) * gi[(nu, sg)] * kgi[(aa, be)];
            }
        }
        s
    });

    Ok(FlatTerms {
        h_christoffel,
        curvature_terms: [f1, f2, f3, f4, f5, f6],
        regrouped,
        gamma_terms: [g1, g2],
    })
}
