//! Compact Lie algebra data: structure constants, Cartan-Killing metric and
//! the adjoint representation.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WongError};
use crate::tensor::Tensor3;

/// Acceptance threshold for [`LieAlgebraSpec::validate_structure`].
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Sign `s` in `k_ab = s * c^t_{m a} c^m_{t b}`.
///
/// `Negative` (the default) makes `k` positive-definite for compact
/// semisimple algebras in a real basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KillingSign {
    #[default]
    Negative,
    Positive,
}

impl KillingSign {
    pub fn factor(self) -> f64 {
        match self {
            KillingSign::Negative => -1.0,
            KillingSign::Positive => 1.0,
        }
    }
}

/// Structure constants `c[g][a][b] = c^g_{ab}` together with the bilinear
/// form `k` used to raise and lower algebra indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSpec {
    name: String,
    c: Tensor3,
    k: DMatrix<f64>,
    k_inv: DMatrix<f64>,
    sign: KillingSign,
    k_user_supplied: bool,
    abelian: bool,
}

/// On-disk form: `{ "dim", "c": flattened row-major c^g_{ab}, "k": optional }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    pub c: Vec<f64>,
    #[serde(default)]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sign: KillingSign,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub ad_invariance: f64,
    /// Distance between `k` and the signed Killing form; `None` when `k` was
    /// supplied for an abelian algebra.
    pub killing_form: Option<f64>,
    pub k_inverse: f64,
    pub notes: Vec<String>,
    pub passed: bool,
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl LieAlgebraSpec {
    /// Build from structure constants. When `k` is `None` the signed Killing
    /// form is used; abelian algebras default to the identity.
    pub fn new(name: impl Into<String>, c: Tensor3, k: Option<DMatrix<f64>>, sign: KillingSign) -> Result<Self> {
        let [g, a, b] = c.dims();
        if g != a || a != b {
            return Err(WongError::dim(format!("structure constants have shape {:?}", c.dims())));
        }
        let n = g;
        let abelian = c.max_abs() == 0.0;
        let k_user_supplied = k.is_some();
        let k = match k {
            Some(k) => {
                if k.shape() != (n, n) {
                    return Err(WongError::dim(format!("k is {:?}, algebra has dim {n}", k.shape())));
                }
                k
            }
            None if abelian => DMatrix::identity(n, n),
            None => killing_form(&c, sign),
        };
        let k_inv = k
            .clone()
            .try_inverse()
            .ok_or_else(|| WongError::Config("bilinear form k is singular".into()))?;
        Ok(Self {
            name: name.into(),
            c,
            k,
            k_inv,
            sign,
            k_user_supplied,
            abelian,
        })
    }

    pub fn u1() -> Self {
        Self::new("u1", Tensor3::zeros(1, 1, 1), None, KillingSign::Negative).expect("u(1) is valid")
    }

    /// su(2) in the basis with `c^a_{bc} = eps_{abc}`; `k = 2 * identity`.
    pub fn su2() -> Self {
        let c = Tensor3::from_fn(3, 3, 3, levi_civita);
        Self::new("su2", c, None, KillingSign::Negative).expect("su(2) is valid")
    }

    /// so(3) with the same structure constants as su(2).
    pub fn so3() -> Self {
        let mut s = Self::su2();
        s.name = "so3".into();
        s
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "u1" => Ok(Self::u1()),
            "su2" => Ok(Self::su2()),
            "so3" => Ok(Self::so3()),
            other => Err(WongError::Config(format!("unknown algebra `{other}`"))),
        }
    }

    pub fn from_config(cfg: &AlgebraConfig) -> Result<Self> {
        let n = cfg.dim;
        let c = Tensor3::from_vec([n, n, n], cfg.c.clone())?;
        let k = match &cfg.k {
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(WongError::dim(format!("k must be {n}x{n}")));
                }
                Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            None => None,
        };
        Self::new(cfg.name.clone().unwrap_or_else(|| "custom".into()), c, k, cfg.sign)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: AlgebraConfig = serde_json::from_str(&text).map_err(|e| WongError::Config(e.to_string()))?;
        Self::from_config(&cfg)
    }

    pub fn to_config(&self) -> AlgebraConfig {
        let n = self.dim();
        AlgebraConfig {
            name: Some(self.name.clone()),
            dim: n,
            c: self.c.data().to_vec(),
            k: Some((0..n).map(|i| (0..n).map(|j| self.k[(i, j)]).collect()).collect()),
            sign: self.sign,
        }
    }

    /// Replace the structure constants, keeping `k` (used to build mutated
    /// algebras in tests and diagnostics).
    pub fn with_structure_constants(&self, c: Tensor3) -> Result<Self> {
        Self::new(self.name.clone(), c, Some(self.k.clone()), self.sign)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }
    /// `c^g_{ab}` stored as `c[g][a][b]`.
    pub fn c(&self) -> &Tensor3 {
        &self.c
    }
    #[inline]
    pub fn c_at(&self, g: usize, a: usize, b: usize) -> f64 {
        self.c.get(g, a, b)
    }
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }
    pub fn k_inv(&self) -> &DMatrix<f64> {
        &self.k_inv
    }
    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    /// `(ad_xi)^g_b = c^g_{ab} xi^a`.
    pub fn adjoint_matrix(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if xi.len() != n {
            return Err(WongError::dim(format!("algebra vector of length {} for dim {n}", xi.len())));
        }
        Ok(DMatrix::from_fn(n, n, |g, b| (0..n).map(|a| self.c.get(g, a, b) * xi[a]).sum()))
    }

    /// Bracket `[x, y]^g = c^g_{ab} x^a y^b`.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.c.contract_last_two(x, y)
    }

    pub fn validate_structure(&self) -> ValidationReport {
        let n = self.dim();
        let c = &self.c;
        let mut antisym: f64 = 0.0;
        for g in 0..n {
            for a in 0..n {
                for b in 0..n {
                    antisym = antisym.max((c.get(g, a, b) + c.get(g, b, a)).abs());
                }
            }
        }
        let mut jacobi: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for g in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for sg in 0..n {
                            s += c.get(sg, a, b) * c.get(m, sg, g)
                                + c.get(sg, b, g) * c.get(m, sg, a)
                                + c.get(sg, g, a) * c.get(m, sg, b);
                        }
                        jacobi = jacobi.max(s.abs());
                    }
                }
            }
        }
        let mut ad_inv: f64 = 0.0;
        for m in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for sg in 0..n {
                        s += c.get(sg, m, a) * self.k[(sg, b)] + c.get(sg, m, b) * self.k[(a, sg)];
                    }
                    ad_inv = ad_inv.max(s.abs());
                }
            }
        }
        let mut notes = Vec::new();
        let killing = if self.abelian {
            notes.push("abelian: k user-supplied".to_string());
            None
        } else {
            let kf = killing_form(c, self.sign);
            Some((&kf - &self.k).amax())
        };
        if self.k_user_supplied && !self.abelian {
            notes.push("k supplied explicitly".to_string());
        }
        let k_inverse = (&self.k * &self.k_inv - DMatrix::identity(n, n)).amax();
        // An explicitly supplied k only needs to be ad-invariant.
        let killing_ok = self.k_user_supplied || killing.is_none_or(|d| d <= STRUCTURE_TOL);
        let passed = antisym <= STRUCTURE_TOL
            && jacobi <= STRUCTURE_TOL
            && ad_inv <= STRUCTURE_TOL
            && killing_ok
            && k_inverse <= 1e-12;
        ValidationReport {
            dim: n,
            antisymmetry: antisym,
            jacobi,
            ad_invariance: ad_inv,
            killing_form: killing,
            k_inverse,
            notes,
            passed,
        }
    }

    /// Direct sum of `copies` copies of this algebra with `k` scaled by
    /// `k_scale` (used for the lattice extended index `(alpha, x)`).
    pub fn direct_sum(&self, copies: usize, k_scale: f64) -> Self {
        let n = self.dim();
        let big = n * copies;
        let mut c = Tensor3::zeros(big, big, big);
        let mut k = DMatrix::zeros(big, big);
        for s in 0..copies {
            for g in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        c.set(s * n + g, s * n + a, s * n + b, self.c.get(g, a, b));
                    }
                    k[(s * n + g, s * n + a)] = self.k[(g, a)] * k_scale;
                }
            }
        }
        Self::new(format!("{}^{copies}", self.name), c, Some(k), self.sign).expect("direct sum is valid")
    }
}

/// `s * c^t_{m a} c^m_{t b}`.
pub fn killing_form(c: &Tensor3, sign: KillingSign) -> DMatrix<f64> {
    let n = c.dims()[0];
    let s = sign.factor();
    DMatrix::from_fn(n, n, |a, b| {
        let mut acc = 0.0;
        for t in 0..n {
            for m in 0..n {
                acc += c.get(t, m, a) * c.get(m, t, b);
            }
        }
        s * acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_killing_form_is_twice_identity() {
        // brute-force double contraction written out independently
        let su2 = LieAlgebraSpec::su2();
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = 0.0;
                for t in 0..3 {
                    for m in 0..3 {
                        acc -= levi_civita(t, m, a) * levi_civita(m, t, b);
                    }
                }
                let expect = if a == b { 2.0 } else { 0.0 };
                assert_eq!(acc, expect);
                assert_eq!(su2.k()[(a, b)], expect);
            }
        }
        let rep = su2.validate_structure();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.jacobi <= 1e-12 && rep.antisymmetry <= 1e-12);
    }

    #[test]
    fn u1_is_abelian_with_flagged_k() {
        let u1 = LieAlgebraSpec::u1();
        let rep = u1.validate_structure();
        assert!(rep.passed);
        assert!(rep.notes.iter().any(|n| n == "abelian: k user-supplied"));
        assert_eq!(u1.k()[(0, 0)], 1.0);
    }

    #[test]
    fn flipped_sign_breaks_jacobi() {
        let su2 = LieAlgebraSpec::su2();
        let mut c = su2.c().clone();
        // flip c^1_{23} only (antisymmetric partner untouched)
        c.set(0, 1, 2, -c.get(0, 1, 2));
        let bad = su2.with_structure_constants(c).unwrap();
        let rep = bad.validate_structure();
        assert!(rep.jacobi > 0.0 || rep.antisymmetry > 0.0);
        assert!(!rep.passed);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let c = Tensor3::zeros(2, 3, 3);
        assert!(matches!(
            LieAlgebraSpec::new("bad", c, None, KillingSign::Negative),
            Err(WongError::DimensionMismatch(_))
        ));
        let su2 = LieAlgebraSpec::su2();
        assert!(su2.adjoint_matrix(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn adjoint_of_basis_vector_is_epsilon_slice() {
        let su2 = LieAlgebraSpec::su2();
        let m = su2.adjoint_matrix(&DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        for g in 0..3 {
            for b in 0..3 {
                assert_eq!(m[(g, b)], levi_civita(g, 0, b));
            }
        }
        assert_eq!(&m + m.transpose(), DMatrix::zeros(3, 3));
        assert_eq!(su2.adjoint_matrix(&DVector::zeros(3)).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn config_round_trip_preserves_algebra() {
        let su2 = LieAlgebraSpec::su2();
        let json = serde_json::to_string(&su2.to_config()).unwrap();
        let cfg: AlgebraConfig = serde_json::from_str(&json).unwrap();
        let back = LieAlgebraSpec::from_config(&cfg).unwrap();
        assert_eq!(back.c(), su2.c());
        assert_eq!(back.k(), su2.k());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]

        #[test]
        fn exp_ad_preserves_killing_form(x in proptest::array::uniform3(-1.0f64..1.0), r in 0.0f64..2.0, which in 0usize..2) {
            let alg = [LieAlgebraSpec::su2(), LieAlgebraSpec::so3()][which].clone();
            let xi = DVector::from_row_slice(&x);
            let xi = if xi.norm() > 0.0 { xi.normalize() * r } else { xi };
            let m = alg.adjoint_matrix(&xi).unwrap();
            let rho = m.clone().exp();
            proptest::prop_assert!((rho.transpose() * alg.k() * &rho - alg.k()).amax() <= 1e-10);
            proptest::prop_assert!((&rho * (-m).exp() - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-12);
        }
    }
}
