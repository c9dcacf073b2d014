//! Canonical (exponential) coordinates of the first kind on the symmetry
//! group and the auxiliary matrices built from them.
//!
//! With `g = exp(a^k E_k)` and `X = ad_a`:
//! * `u(a)`    left-trivialized derivative, `g^-1 dg = u da`,  `u = (1 - e^-X)/X`
//! * `ubar(a)` right-trivialized derivative, `dg g^-1 = ubar da`, `ubar = (e^X - 1)/X`
//! * `v = u^-1` (columns are the left-invariant fields `L_alpha`), `vbar = ubar^-1`
//! * `rho = Ad_g = e^X = ubar v`

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WongError};
use crate::lie_algebra::LieAlgebraSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ChartKind {
    Abelian,
    /// Closed forms valid for algebras with `c = eps` (su(2), so(3)).
    Rotation,
    Series,
}

#[derive(Clone, Debug)]
pub struct GroupChart {
    algebra: Arc<LieAlgebraSpec>,
    kind: ChartKind,
}

/// All chart matrices at one group point.
#[derive(Clone, Debug)]
pub struct GroupFrame {
    pub u: DMatrix<f64>,
    pub u_bar: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub v_bar: DMatrix<f64>,
    pub rho: DMatrix<f64>,
    pub rho_bar: DMatrix<f64>,
}

fn is_epsilon_algebra(alg: &LieAlgebraSpec) -> bool {
    if alg.dim() != 3 {
        return false;
    }
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    (0..27).all(|n| {
        let (i, j, k) = (n / 9, (n / 3) % 3, n % 3);
        alg.c_at(i, j, k) == eps(i, j, k)
    })
}

/// Coefficients `(A, B, C, D)` of the rotation closed forms as functions of
/// `r = |a|`: `A = sin r / r`, `B = (1 - cos r)/r^2`, `C = (1 - A)/r^2`,
/// `D = (1 - A/(2B))/r^2`.
fn rotation_coefficients(r: f64) -> (f64, f64, f64, f64) {
    let r2 = r * r;
    let (a, b, c) = if r < 1e-2 {
        (
            1.0 - r2 / 6.0 + r2 * r2 / 120.0 - r2 * r2 * r2 / 5040.0,
            0.5 - r2 / 24.0 + r2 * r2 / 720.0 - r2 * r2 * r2 / 40320.0,
            1.0 / 6.0 - r2 / 120.0 + r2 * r2 / 5040.0 - r2 * r2 * r2 / 362880.0,
        )
    } else {
        let a = r.sin() / r;
        (a, (1.0 - r.cos()) / r2, (1.0 - a) / r2)
    };
    let d = if r < 0.1 {
        1.0 / 12.0 + r2 / 720.0 + r2 * r2 / 30240.0 + r2 * r2 * r2 / 1209600.0
    } else {
        (1.0 - a / (2.0 * b)) / r2
    };
    (a, b, c, d)
}

/// `sum_n coeff(n) X^n`, truncated once terms fall below roundoff.
pub fn matrix_series(x: &DMatrix<f64>, coeff: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let n = x.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut sum = power.clone() * coeff(0);
    for k in 1..80 {
        power = &power * x;
        let term = &power * coeff(k);
        let size = term.amax();
        sum += term;
        if size < 1e-18 * sum.amax().max(1.0) && k > 4 {
            break;
        }
    }
    sum
}

/// Series value together with its directional derivative along `dx`.
pub fn matrix_series_with_derivative(
    x: &DMatrix<f64>,
    dx: &DMatrix<f64>,
    coeff: impl Fn(usize) -> f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mut power = DMatrix::identity(n, n);
    let mut dpower = DMatrix::zeros(n, n);
    let mut sum = power.clone() * coeff(0);
    let mut dsum = DMatrix::zeros(n, n);
    for k in 1..80 {
        dpower = &dpower * x + &power * dx;
        power = &power * x;
        let c = coeff(k);
        let size = power.amax().max(dpower.amax()) * c.abs();
        sum += &power * c;
        dsum += &dpower * c;
        if size < 1e-18 * sum.amax().max(1.0) && k > 4 {
            break;
        }
    }
    (sum, dsum)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// `exp` series coefficient.
pub fn exp_coeff(n: usize) -> f64 {
    1.0 / factorial(n)
}

/// Coefficient of `(1 - e^-X)/X`.
pub fn left_dexp_coeff(n: usize) -> f64 {
    let s = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    s / factorial(n + 1)
}

/// Coefficient of `(e^X - 1)/X`.
pub fn right_dexp_coeff(n: usize) -> f64 {
    1.0 / factorial(n + 1)
}

impl GroupChart {
    pub fn new(algebra: Arc<LieAlgebraSpec>) -> Self {
        let kind = if algebra.is_abelian() {
            ChartKind::Abelian
        } else if is_epsilon_algebra(&algebra) {
            ChartKind::Rotation
        } else {
            ChartKind::Series
        };
        Self { algebra, kind }
    }

    /// Chart that always uses the truncated power series.
    pub fn series(algebra: Arc<LieAlgebraSpec>) -> Self {
        Self {
            algebra,
            kind: ChartKind::Series,
        }
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn name(&self) -> &str {
        self.algebra.name()
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn frame(&self, a: &DVector<f64>) -> Result<GroupFrame> {
        let n = self.dim();
        if a.len() != n {
            return Err(WongError::dim(format!("group point of length {} for dim {n}", a.len())));
        }
        let id = DMatrix::<f64>::identity(n, n);
        match self.kind {
            ChartKind::Abelian => Ok(GroupFrame {
                u: id.clone(),
                u_bar: id.clone(),
                v: id.clone(),
                v_bar: id.clone(),
                rho: id.clone(),
                rho_bar: id,
            }),
            ChartKind::Rotation => {
                let x = self.algebra.adjoint_matrix(a)?;
                let x2 = &x * &x;
                let (ca, cb, cc, cd) = rotation_coefficients(a.norm());
                let rho = &id + &x * ca + &x2 * cb;
                let rho_bar = &id - &x * ca + &x2 * cb;
                let u = &id - &x * cb + &x2 * cc;
                let u_bar = &id + &x * cb + &x2 * cc;
                let v = &id + &x * 0.5 + &x2 * cd;
                let v_bar = &id - &x * 0.5 + &x2 * cd;
                Ok(GroupFrame {
                    u,
                    u_bar,
                    v,
                    v_bar,
                    rho,
                    rho_bar,
                })
            }
            ChartKind::Series => {
                let x = self.algebra.adjoint_matrix(a)?;
                let rho = matrix_series(&x, exp_coeff);
                let rho_bar = matrix_series(&(-&x), exp_coeff);
                let u = matrix_series(&x, left_dexp_coeff);
                let u_bar = matrix_series(&x, right_dexp_coeff);
                let v = u
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| WongError::EvaluationFailure("group chart singular".into()))?;
                let v_bar = u_bar
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| WongError::EvaluationFailure("group chart singular".into()))?;
                Ok(GroupFrame {
                    u,
                    u_bar,
                    v,
                    v_bar,
                    rho,
                    rho_bar,
                })
            }
        }
    }
}
