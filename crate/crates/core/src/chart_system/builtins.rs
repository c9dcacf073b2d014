//! Built-in example systems with analytic derivatives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ChartModel, ChartSystem};
use crate::error::{Result, WongError};
use crate::lie_algebra::LieAlgebraSpec;
use crate::oracle::group_chart::{exp_coeff, left_dexp_coeff, matrix_series_with_derivative};
use crate::tensor::Tensor3;

pub const BUILTIN_NAMES: [&str; 5] = ["so2_halfplane", "hopf_s3", "kk_trivial_u1", "kk_trivial_su2", "su2_twovector"];

pub fn builtin(name: &str) -> Result<ChartSystem> {
    match name {
        "so2_halfplane" => ChartSystem::new(name, LieAlgebraSpec::u1(), Arc::new(So2HalfPlane), true),
        "hopf_s3" => ChartSystem::new(name, LieAlgebraSpec::u1(), Arc::new(HopfS3), false),
        "kk_trivial_u1" => kk_trivial(name, LieAlgebraSpec::u1(), KkPotential::uniform_field(1, 2, 0, 1.0)),
        "kk_trivial_su2" => kk_trivial(name, LieAlgebraSpec::su2(), KkPotential::default_su2()),
        "su2_twovector" => ChartSystem::new(name, LieAlgebraSpec::su2(), Arc::new(Su2TwoVector), true),
        other => Err(WongError::UnknownSystem(other.to_string())),
    }
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Flat plane without the origin, rotations, section `y = 0`.
struct So2HalfPlane;

impl ChartModel for So2HalfPlane {
    fn n_p(&self) -> usize {
        2
    }
    fn n_g(&self) -> usize {
        1
    }
    fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        if q[0] * q[0] + q[1] * q[1] < 1e-24 {
            return Err(WongError::EvaluationFailure("so2_halfplane: origin is a fixed point".into()));
        }
        Ok(DMatrix::identity(2, 2))
    }
    fn metric_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(2, 2, 2)))
    }
    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_column_slice(2, 1, &[-q[1], q[0]]))
    }
    fn killing_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let mut t = Tensor3::zeros(2, 1, 2);
        t.set(0, 0, 1, -1.0);
        t.set(1, 0, 0, 1.0);
        Some(Ok(t))
    }
    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, q[1]))
    }
    fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]))
    }
    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(1, 2, 2)))
    }
}

/// Unit three-sphere in graph coordinates `(q1, q2, q3)` with
/// `q4 = sqrt(1 - |q|^2) > 0`, Hopf circle action, section `q2 = 0`.
struct HopfS3;

impl HopfS3 {
    fn s(q: &DVector<f64>) -> Result<f64> {
        let s = 1.0 - q.norm_squared();
        if s <= 1e-8 {
            Err(WongError::EvaluationFailure(format!("hopf_s3: point leaves the chart (1 - |q|^2 = {s:.3e})")))
        } else {
            Ok(s)
        }
    }
}

impl ChartModel for HopfS3 {
    fn n_p(&self) -> usize {
        3
    }
    fn n_g(&self) -> usize {
        1
    }
    fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let s = Self::s(q)?;
        Ok(DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 } + q[i] * q[j] / s))
    }
    fn metric_deriv(&self, q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Self::s(q).map(|s| {
            let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
            Tensor3::from_fn(3, 3, 3, |i, j, k| {
                (d(i, k) * q[j] + q[i] * d(j, k)) / s + 2.0 * q[i] * q[j] * q[k] / (s * s)
            })
        }))
    }
    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let s = Self::s(q)?;
        Ok(DMatrix::from_column_slice(3, 1, &[-q[1], q[0], -s.sqrt()]))
    }
    fn killing_deriv(&self, q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Self::s(q).map(|s| {
            let r = s.sqrt();
            let mut t = Tensor3::zeros(3, 1, 3);
            t.set(0, 0, 1, -1.0);
            t.set(1, 0, 0, 1.0);
            for k in 0..3 {
                t.set(2, 0, k, q[k] / r);
            }
            t
        }))
    }
    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, q[1]))
    }
    fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]))
    }
    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(1, 3, 3)))
    }
}

/// Two vectors in R^3 under the diagonal rotation action
/// `K_alpha(x) = (x1 x e_alpha, x2 x e_alpha)`; the section puts `x1` on
/// the e3 axis and `x2` in the e2-e3 plane.
struct Su2TwoVector;

impl Su2TwoVector {
    fn check(q: &DVector<f64>) -> Result<()> {
        let x1 = nalgebra::Vector3::new(q[0], q[1], q[2]);
        let x2 = nalgebra::Vector3::new(q[3], q[4], q[5]);
        if x1.cross(&x2).norm() < 1e-10 {
            return Err(WongError::EvaluationFailure("su2_twovector: vectors are parallel".into()));
        }
        Ok(())
    }
}

impl ChartModel for Su2TwoVector {
    fn n_p(&self) -> usize {
        6
    }
    fn n_g(&self) -> usize {
        3
    }
    fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Self::check(q)?;
        Ok(DMatrix::identity(6, 6))
    }
    fn metric_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(6, 6, 6)))
    }
    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(6, 3, |row, alpha| {
            let (block, i) = (row / 3, row % 3);
            (0..3).map(|j| eps(i, j, alpha) * q[3 * block + j]).sum()
        }))
    }
    fn killing_deriv(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::from_fn(6, 3, 6, |row, alpha, col| {
            if row / 3 == col / 3 {
                eps(row % 3, col % 3, alpha)
            } else {
                0.0
            }
        })))
    }
    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(vec![q[0], q[1], q[3]]))
    }
    fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(3, 6);
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        j[(2, 3)] = 1.0;
        Ok(j)
    }
    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(Ok(Tensor3::zeros(3, 6, 6)))
    }
}

/// Affine gauge potential `a^alpha_i(x) = a0^alpha_i + s^alpha_{ij} x^j`.
#[derive(Clone, Debug)]
pub struct KkPotential {
    pub offset: DMatrix<f64>,
    /// `slope[alpha][i][j] = d a^alpha_i / d x^j`.
    pub slope: Tensor3,
}

impl KkPotential {
    pub fn constant(offset: DMatrix<f64>) -> Self {
        let (n_g, d) = offset.shape();
        Self {
            offset,
            slope: Tensor3::zeros(n_g, d, d),
        }
    }

    /// Symmetric-gauge potential `a^alpha = (-B x2/2, B x1/2)` for one
    /// algebra component, giving a uniform field strength `B` in the
    /// `(x1, x2)` plane.
    pub fn uniform_field(n_g: usize, d: usize, alpha: usize, b: f64) -> Self {
        let mut slope = Tensor3::zeros(n_g, d, d);
        slope.set(alpha, 0, 1, -0.5 * b);
        slope.set(alpha, 1, 0, 0.5 * b);
        Self {
            offset: DMatrix::zeros(n_g, d),
            slope,
        }
    }

    /// Non-commuting components: a uniform field along `E_3` plus constant
    /// `E_1`/`E_2` pieces.
    pub fn default_su2() -> Self {
        let mut p = Self::uniform_field(3, 2, 2, 0.8);
        p.offset[(0, 0)] = 0.3;
        p.offset[(1, 1)] = -0.2;
        p.slope.set(0, 1, 0, 0.15);
        p
    }

    pub fn n_g(&self) -> usize {
        self.offset.nrows()
    }
    pub fn dim(&self) -> usize {
        self.offset.ncols()
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let (n_g, d) = self.offset.shape();
        DMatrix::from_fn(n_g, d, |a, i| {
            self.offset[(a, i)] + (0..d).map(|j| self.slope.get(a, i, j) * x[j]).sum::<f64>()
        })
    }

    /// `d a / d x^j`.
    pub fn derivative(&self, j: usize) -> DMatrix<f64> {
        let (n_g, d) = self.offset.shape();
        DMatrix::from_fn(n_g, d, |a, i| self.slope.get(a, i, j))
    }
}

/// Kaluza-Klein metric on `R^d x G` built from the connection form
/// `omega = Ad_{g^-1} a(x) dx + g^-1 dg` and `gamma = k`; section `theta = 0`.
struct KkTrivial {
    algebra: LieAlgebraSpec,
    potential: KkPotential,
}

pub fn kk_trivial(name: &str, algebra: LieAlgebraSpec, potential: KkPotential) -> Result<ChartSystem> {
    if potential.n_g() != algebra.dim() {
        return Err(WongError::dim("potential and algebra dimensions differ"));
    }
    let model = KkTrivial {
        algebra: algebra.clone(),
        potential,
    };
    ChartSystem::new(name, algebra, Arc::new(model), false)
}

struct KkPieces {
    /// `Ad_{g^-1} a`
    m: DMatrix<f64>,
    u: DMatrix<f64>,
    dm: Vec<DMatrix<f64>>,
    du: Vec<DMatrix<f64>>,
}

impl KkTrivial {
    fn d(&self) -> usize {
        self.potential.dim()
    }

    fn split<'a>(&self, q: &'a DVector<f64>) -> (&'a [f64], DVector<f64>) {
        let d = self.d();
        let s = q.as_slice();
        (&s[..d], DVector::from_column_slice(&s[d..]))
    }

    fn pieces(&self, q: &DVector<f64>, with_derivs: bool) -> Result<KkPieces> {
        let d = self.d();
        let n = self.algebra.dim();
        let (x, theta) = self.split(q);
        if theta.norm() > 3.0 {
            return Err(WongError::EvaluationFailure("kk_trivial: group coordinates leave the chart".into()));
        }
        let ad = self.algebra.adjoint_matrix(&theta)?;
        let a = self.potential.value(x);
        let zero = DMatrix::zeros(n, n);
        let (r, _) = matrix_series_with_derivative(&(-&ad), &zero, exp_coeff);
        let (u, _) = matrix_series_with_derivative(&ad, &zero, left_dexp_coeff);
        let m = &r * &a;
        let mut dm = Vec::new();
        let mut du = Vec::new();
        if with_derivs {
            for j in 0..d {
                dm.push(&r * self.potential.derivative(j));
                du.push(DMatrix::zeros(n, n));
            }
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                let dad = self.algebra.adjoint_matrix(&e)?;
                let (_, dr) = matrix_series_with_derivative(&(-&ad), &(-&dad), exp_coeff);
                let (_, duj) = matrix_series_with_derivative(&ad, &dad, left_dexp_coeff);
                dm.push(dr * &a);
                du.push(duj);
            }
        }
        Ok(KkPieces { m, u, dm, du })
    }

    fn assemble(&self, m: &DMatrix<f64>, u: &DMatrix<f64>, dm: &DMatrix<f64>, du: &DMatrix<f64>, base: f64) -> DMatrix<f64> {
        // G = [[base*I + m^T k m, m^T k u], [u^T k m, u^T k u]] (or its derivative
        // when (dm, du) are the directional derivatives and base = 0)
        let d = self.d();
        let n = self.algebra.dim();
        let k = self.algebra.k();
        let xx = dm.transpose() * k * m + m.transpose() * k * dm;
        let xt = dm.transpose() * k * u + m.transpose() * k * du;
        let tt = du.transpose() * k * u + u.transpose() * k * du;
        let mut g = DMatrix::zeros(d + n, d + n);
        g.view_mut((0, 0), (d, d)).copy_from(&xx);
        for i in 0..d {
            g[(i, i)] += base;
        }
        g.view_mut((0, d), (d, n)).copy_from(&xt);
        g.view_mut((d, 0), (n, d)).copy_from(&xt.transpose());
        g.view_mut((d, d), (n, n)).copy_from(&tt);
        g
    }
}

impl ChartModel for KkTrivial {
    fn n_p(&self) -> usize {
        self.d() + self.algebra.dim()
    }
    fn n_g(&self) -> usize {
        self.algebra.dim()
    }
    fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.pieces(q, false)?;
        // value: (m, u) enter quadratically; halve the symmetrized form
        let g = self.assemble(&p.m, &p.u, &p.m, &p.u, 2.0) * 0.5;
        Ok(g)
    }
    fn metric_deriv(&self, q: &DVector<f64>) -> Option<Result<Tensor3>> {
        Some(self.pieces(q, true).map(|p| {
            let slices: Vec<_> = p
                .dm
                .iter()
                .zip(&p.du)
                .map(|(dm, du)| self.assemble(&p.m, &p.u, dm, du, 0.0))
                .collect();
            Tensor3::from_slices(&slices)
        }))
    }
    fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = self.d();
        let n = self.algebra.dim();
        let p = self.pieces(q, false)?;
        let v = p
            .u
            .try_inverse()
            .ok_or_else(|| WongError::EvaluationFailure("kk_trivial: singular group chart".into()))?;
        let mut k = DMatrix::zeros(d + n, n);
        k.view_mut((d, 0), (n, n)).copy_from(&v);
        Ok(k)
    }
    fn killing_deriv(&self, q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let d = self.d();
        let n = self.algebra.dim();
        Some(self.pieces(q, true).and_then(|p| {
            let v = p
                .u
                .clone()
                .try_inverse()
                .ok_or_else(|| WongError::EvaluationFailure("kk_trivial: singular group chart".into()))?;
            let slices: Vec<_> = p
                .du
                .iter()
                .map(|du| {
                    let dv = -(&v * du * &v);
                    let mut s = DMatrix::zeros(d + n, n);
                    s.view_mut((d, 0), (n, n)).copy_from(&dv);
                    s
                })
                .collect();
            Ok(Tensor3::from_slices(&slices))
        }))
    }
    fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&q.as_slice()[self.d()..]))
    }
    fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = self.d();
        let n = self.algebra.dim();
        let mut j = DMatrix::zeros(n, d + n);
        for a in 0..n {
            j[(a, d + a)] = 1.0;
        }
        Ok(j)
    }
    fn constraint_hessian(&self, _q: &DVector<f64>) -> Option<Result<Tensor3>> {
        let n = self.algebra.dim();
        let np = self.n_p();
        Some(Ok(Tensor3::zeros(n, np, np)))
    }
}

/// Random chart point of a builtin, away from chart boundaries and
/// degenerate orbits (not necessarily on the section).
pub fn sample_point(name: &str, rng: &mut impl rand::Rng) -> Result<DVector<f64>> {
    Ok(match name {
        "so2_halfplane" => DVector::from_vec(vec![rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)]),
        "hopf_s3" => DVector::from_vec(vec![rng.gen_range(0.2..0.6), rng.gen_range(-0.3..0.3), rng.gen_range(-0.4..0.4)]),
        "kk_trivial_u1" => DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)),
        "kk_trivial_su2" => DVector::from_fn(5, |i, _| if i < 2 { rng.gen_range(-1.0..1.0) } else { rng.gen_range(-0.8..0.8) }),
        "su2_twovector" => {
            let mut q = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
            q[2] += 1.5;
            q[4] += 1.0;
            q
        }
        other => return Err(WongError::UnknownSystem(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_system::DerivMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_shapes() {
        let s = builtin("so2_halfplane").unwrap();
        assert_eq!((s.n_p(), s.n_g(), s.is_flat()), (2, 1, true));
        let t = builtin("su2_twovector").unwrap();
        let q = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(t.constraint(&q).unwrap(), DVector::zeros(3));
        assert!(matches!(builtin("torus"), Err(WongError::UnknownSystem(_))));
    }

    #[test]
    fn killing_residuals_vanish_on_builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for name in BUILTIN_NAMES {
            let sys = builtin(name).unwrap();
            let fd = sys.clone().with_deriv_mode(DerivMode::FiniteDifference);
            for _ in 0..50 {
                let q = sample_point(name, &mut rng).unwrap();
                let r = sys.killing_residual(&q).unwrap();
                assert!(r <= 1e-8, "{name}: analytic residual {r}");
                let r = fd.killing_residual(&q).unwrap();
                assert!(r <= 1e-5, "{name}: fd residual {r}");
                let b = sys.bracket_residual(&q).unwrap();
                assert!(b <= 1e-9, "{name}: bracket residual {b}");
            }
        }
    }

    #[test]
    fn analytic_and_fd_derivatives_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in BUILTIN_NAMES {
            let sys = builtin(name).unwrap();
            let fd = sys.clone().with_deriv_mode(DerivMode::FiniteDifference);
            for _ in 0..10 {
                let q = sample_point(name, &mut rng).unwrap();
                let a = sys.metric_deriv(&q).unwrap();
                let b = fd.metric_deriv(&q).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-6, "{name} metric");
                let a = sys.killing_deriv(&q).unwrap();
                let b = fd.killing_deriv(&q).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-6, "{name} killing");
            }
        }
    }

    #[test]
    fn plane_rotation_is_killing_and_shear_is_not() {
        let sys = builtin("so2_halfplane").unwrap();
        assert!(sys.killing_residual(&DVector::from_vec(vec![2.0, 0.0])).unwrap() <= 1e-12);

        struct Shear;
        impl ChartModel for Shear {
            fn n_p(&self) -> usize {
                2
            }
            fn n_g(&self) -> usize {
                1
            }
            fn metric(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
                Ok(DMatrix::identity(2, 2))
            }
            fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
                Ok(DMatrix::from_column_slice(2, 1, &[q[0], 0.0]))
            }
            fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_element(1, q[1]))
            }
            fn constraint_jac(&self, _q: &DVector<f64>) -> Result<DMatrix<f64>> {
                Ok(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]))
            }
        }
        let shear = ChartSystem::new("shear", LieAlgebraSpec::u1(), Arc::new(Shear), true).unwrap();
        let r = shear.killing_residual(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        // 2 * G_11 up to finite-difference error
        assert!((r - 2.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn negated_generator_breaks_bracket() {
        struct Flipped;
        impl ChartModel for Flipped {
            fn n_p(&self) -> usize {
                6
            }
            fn n_g(&self) -> usize {
                3
            }
            fn metric(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
                Su2TwoVector.metric(q)
            }
            fn killing(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
                let mut k = Su2TwoVector.killing(q)?;
                let c = -k.column(2);
                k.set_column(2, &c);
                Ok(k)
            }
            fn constraint(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
                Su2TwoVector.constraint(q)
            }
            fn constraint_jac(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
                Su2TwoVector.constraint_jac(q)
            }
        }
        let sys = ChartSystem::new("flipped", LieAlgebraSpec::su2(), Arc::new(Flipped), true).unwrap();
        let q = DVector::from_vec(vec![0.3, -0.2, 1.0, 0.5, 1.0, 1.0]);
        assert!(sys.bracket_residual(&q).unwrap() > 0.1);
    }

    #[test]
    fn chart_boundaries_are_errors() {
        let hopf = builtin("hopf_s3").unwrap();
        let q = DVector::from_vec(vec![0.8, 0.0, 0.6]);
        assert!(matches!(hopf.metric(&q), Err(WongError::EvaluationFailure(_))));
        let plane = builtin("so2_halfplane").unwrap();
        assert!(plane.metric(&DVector::zeros(2)).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(50))]

        #[test]
        fn killing_fields_are_isometries(seed in proptest::prelude::any::<u64>(), which in 0usize..5) {
            let name = BUILTIN_NAMES[which];
            let sys = builtin(name).unwrap();
            let q = sample_point(name, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            proptest::prop_assert!(sys.killing_residual(&q).unwrap() <= 1e-8);
            proptest::prop_assert!(sys.bracket_residual(&q).unwrap() <= 1e-9);
        }
    }
}
