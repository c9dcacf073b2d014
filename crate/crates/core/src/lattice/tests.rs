use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::*;
use crate::wong::{wong_rhs, wong_rhs_flat, RhsOptions, WongState};

fn theory(alg: LieAlgebraSpec, d: usize, l: usize) -> LatticeTheory {
    LatticeTheory::new(Lattice::new(d, l, 1.0).unwrap(), alg)
}

fn su2(d: usize, l: usize) -> LatticeTheory {
    theory(LieAlgebraSpec::su2(), d, l)
}

fn random(n: usize, amp: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-amp..amp))
}

pub(crate) fn random_state(th: &LatticeTheory, rng: &mut ChaCha8Rng, amp: f64, speed: f64) -> WongState {
    th.random_state(rng, amp, speed, &SolverOptions::default()).unwrap()
}

/// Multidimensional DFT of one scalar component, `f(n) = sum_x f(x) e^{-i theta.x}`.
fn dft(lat: &Lattice, f: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let l = lat.extent;
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(l) } else { planner.plan_fft_forward(l) };
    let mut data = f.to_vec();
    for i in 0..lat.d {
        let stride = l.pow(i as u32);
        for x in 0..lat.sites() {
            if !(x / stride).is_multiple_of(l) {
                continue;
            }
            let mut line: Vec<Complex64> = (0..l).map(|j| data[x + j * stride]).collect();
            fft.process(&mut line);
            for (j, z) in line.into_iter().enumerate() {
                data[x + j * stride] = z;
            }
        }
    }
    if inverse {
        let n = lat.sites() as f64;
        data.iter_mut().for_each(|z| *z /= n);
    }
    data
}

fn angles(lat: &Lattice, n: usize) -> Vec<f64> {
    lat.coords(n).iter().map(|&c| 2.0 * std::f64::consts::PI * c as f64 / lat.extent as f64).collect()
}

fn component(th: &LatticeTheory, f: &DVector<f64>, stride: usize, offset: usize) -> Vec<Complex64> {
    (0..th.lattice.sites()).map(|x| Complex64::new(f[x * stride + offset], 0.0)).collect()
}

#[test]
fn differences_of_constants_vanish() {
    let th = su2(3, 3);
    let a = DVector::from_element(th.gauge_len(), 0.7);
    let e = DVector::from_element(th.algebra_len(), -0.4);
    assert!(th.divergence(&a).unwrap().iter().all(|x| *x == 0.0));
    assert!(th.gradient(&e).unwrap().iter().all(|x| *x == 0.0));
}

#[test]
fn divergence_is_minus_gradient_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, l, h) in [(2, 2, 1.0), (2, 5, 0.3), (3, 3, 1.7)] {
        let th = LatticeTheory::new(Lattice::new(d, l, h).unwrap(), LieAlgebraSpec::su2());
        let a = random(th.gauge_len(), 1.0, &mut rng);
        let lam = random(th.algebra_len(), 1.0, &mut rng);
        let lhs = th.divergence(&a).unwrap().dot(&lam);
        let rhs = -a.dot(&th.gradient(&lam).unwrap());
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn divergence_matches_fourier_symbol() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let th = LatticeTheory::new(Lattice::new(3, 4, 0.5).unwrap(), LieAlgebraSpec::u1());
    let lat = &th.lattice;
    let a = random(th.gauge_len(), 1.0, &mut rng);
    let div = th.divergence(&a).unwrap();
    let got = dft(lat, &component(&th, &div, 1, 0), false);
    let comps: Vec<Vec<Complex64>> = (0..lat.d).map(|i| dft(lat, &component(&th, &a, lat.d, i), false)).collect();
    for n in 0..lat.sites() {
        let want: Complex64 = angles(lat, n)
            .iter()
            .enumerate()
            .map(|(i, th_i)| (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -th_i)) / lat.spacing * comps[i][n])
            .sum();
        assert!((want - got[n]).norm() < 1e-12);
    }
}

#[test]
fn plane_wave_divergence() {
    let th = LatticeTheory::new(Lattice::new(2, 6, 1.0).unwrap(), LieAlgebraSpec::u1());
    let k = 2.0 * std::f64::consts::PI / 6.0;
    let mut a = th.gauge_zeros();
    for x in 0..th.lattice.sites() {
        a[x * 2] = (k * th.lattice.coords(x)[0] as f64).sin();
    }
    let div = th.divergence(&a).unwrap();
    for x in 0..th.lattice.sites() {
        let n = th.lattice.coords(x)[0] as f64;
        let want = 2.0 * (k / 2.0).sin() * (k * (n - 0.5)).cos();
        assert!((div[x] - want).abs() < 1e-14);
    }
}

#[test]
fn covariant_derivative_special_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ab = theory(LieAlgebraSpec::u1(), 2, 3);
    let a = random(ab.gauge_len(), 1.0, &mut rng);
    let e = random(ab.algebra_len(), 1.0, &mut rng);
    assert_eq!(ab.covariant_derivative(&a, &e).unwrap(), ab.gradient(&e).unwrap());

    let th = su2(2, 3);
    let e = random(th.algebra_len(), 1.0, &mut rng);
    assert_eq!(th.covariant_derivative(&th.gauge_zeros(), &e).unwrap(), th.gradient(&e).unwrap());

    // constant A_i and eps: (D eps)_i = A_i x eps
    let ai = [[0.3, -0.2, 0.5], [0.1, 0.4, -0.6]];
    let ev = [0.7, 0.2, -0.3];
    let a = DVector::from_fn(th.gauge_len(), |j, _| ai[(j / 3) % 2][j % 3]);
    let e = DVector::from_fn(th.algebra_len(), |j, _| ev[j % 3]);
    let de = th.covariant_derivative(&a, &e).unwrap();
    for x in 0..th.lattice.sites() {
        for (i, ai) in ai.iter().enumerate() {
            let cross = [ai[1] * ev[2] - ai[2] * ev[1], ai[2] * ev[0] - ai[0] * ev[2], ai[0] * ev[1] - ai[1] * ev[0]];
            for m in 0..3 {
                assert!((de[(x * 2 + i) * 3 + m] - cross[m]).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn adjointness_and_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let th = LatticeTheory::new(Lattice::new(3, 3, 0.8).unwrap(), LieAlgebraSpec::su2());
    let a = random(th.gauge_len(), 1.0, &mut rng);
    let eta = random(th.gauge_len(), 1.0, &mut rng);
    let e = random(th.algebra_len(), 1.0, &mut rng);
    let lhs = eta.dot(&th.k_apply(&th.covariant_derivative(&a, &e).unwrap()));
    let rhs = th.covariant_adjoint(&a, &eta).unwrap().dot(&e);
    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));

    let e2 = random(th.algebra_len(), 1.0, &mut rng);
    let d1 = th.covariant_derivative(&a, &e).unwrap();
    let d2 = th.covariant_derivative(&a, &e2).unwrap();
    let lhs = e.dot(&th.orbit_apply(&a, &e2).unwrap());
    assert!((lhs - d1.dot(&th.k_apply(&d2))).abs() < 1e-12 * (1.0 + lhs.abs()));
    for _ in 0..100 {
        let e = random(th.algebra_len(), 1.0, &mut rng);
        assert!(e.dot(&th.orbit_apply(&a, &e).unwrap()) >= 0.0);
    }
}

#[test]
fn fp_operator_is_div_of_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let th = su2(2, 3);
    let a = random(th.gauge_len(), 1.0, &mut rng);
    let e = random(th.algebra_len(), 1.0, &mut rng);
    let want = th.divergence(&th.covariant_derivative(&a, &e).unwrap()).unwrap();
    assert_eq!(th.fp_apply(&a, &e).unwrap(), want);
    // at the trivial field both operators are minus the Laplacian (times k)
    let zero = th.gauge_zeros();
    let lap = th.divergence(&th.gradient(&e).unwrap()).unwrap();
    assert!((th.fp_apply(&zero, &e).unwrap() - &lap).amax() < 1e-14);
    assert!((th.orbit_apply(&zero, &e).unwrap() + &lap * 2.0).amax() < 1e-13);
}

#[test]
fn shape_errors() {
    let th = su2(2, 2);
    let bad = DVector::zeros(5);
    assert!(matches!(th.divergence(&bad), Err(WongError::ShapeMismatch(_))));
    assert!(matches!(th.covariant_derivative(&th.gauge_zeros(), &bad), Err(WongError::ShapeMismatch(_))));
}

#[test]
fn green_solve_matches_fourier_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let th = LatticeTheory::new(Lattice::new(3, 4, 0.7).unwrap(), LieAlgebraSpec::su2());
    let lat = &th.lattice;
    let zero = th.gauge_zeros();
    let mut rhs = random(th.algebra_len(), 1.0, &mut rng);
    ZeroModes::at(&th, &zero).remove(&mut rhs);
    let (w, stats) = th.green_solve_with_stats(&zero, &rhs, &SolverOptions::default()).unwrap();
    assert!(stats.residual <= 1e-10);
    let kinv = th.algebra().k_inv().clone();
    for m in 0..3 {
        // k is diagonal for su(2)
        let r = dft(lat, &component(&th, &rhs, 3, m), false);
        let solved: Vec<Complex64> = (0..lat.sites())
            .map(|n| {
                let sym: f64 = angles(lat, n).iter().map(|t| (2.0 - 2.0 * t.cos()) / (lat.spacing * lat.spacing)).sum();
                if n == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    r[n] * kinv[(m, m)] / sym
                }
            })
            .collect();
        let back = dft(lat, &solved, true);
        for x in 0..lat.sites() {
            assert!((back[x].re - w[x * 3 + m]).abs() < 1e-10, "{} vs {}", back[x].re, w[x * 3 + m]);
        }
    }
}

#[test]
fn orbit_eigenvalues_at_trivial_field() {
    let th = su2(2, 5);
    let lat = &th.lattice;
    let zero = th.gauge_zeros();
    let n = [2usize, 1];
    let thn: Vec<f64> = n.iter().map(|&c| 2.0 * std::f64::consts::PI * c as f64 / 5.0).collect();
    let sym: f64 = thn.iter().map(|t| 2.0 - 2.0 * t.cos()).sum();
    let mut e = th.algebra_zeros();
    for x in 0..lat.sites() {
        let c = lat.coords(x);
        e[x * 3 + 1] = (thn[0] * c[0] as f64 + thn[1] * c[1] as f64).cos();
    }
    let out = th.orbit_apply(&zero, &e).unwrap();
    assert!((out - e * (2.0 * sym)).amax() < 1e-12);
}

#[test]
fn green_round_trip_and_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SolverOptions::default();
    let th = su2(3, 3);
    let a = random(th.gauge_len(), 0.5, &mut rng);
    assert_eq!(ZeroModes::at(&th, &a).dim(), 0);
    let e = random(th.algebra_len(), 1.0, &mut rng);
    let w = th.green_solve(&a, &th.orbit_apply(&a, &e).unwrap(), &opts).unwrap();
    assert!((w - &e).amax() < 1e-9);

    let zero = th.gauge_zeros();
    let zm = ZeroModes::at(&th, &zero);
    assert_eq!(zm.dim(), 3);
    let mut e = random(th.algebra_len(), 1.0, &mut rng);
    zm.remove(&mut e);
    let w = th.green_solve(&zero, &th.orbit_apply(&zero, &e).unwrap(), &opts).unwrap();
    assert!((w - &e).amax() < 1e-9);

    let constant = DVector::from_element(th.algebra_len(), 1.0);
    let strict = SolverOptions {
        project_zero_modes: false,
        ..opts
    };
    assert!(matches!(th.green_solve(&zero, &constant, &strict), Err(WongError::KernelComponent(_))));
    assert_eq!(th.green_solve(&zero, &constant, &opts).unwrap().amax(), 0.0);
}

#[test]
fn coulomb_connection_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SolverOptions::default();
    let th = su2(3, 4);
    let zero = th.gauge_zeros();
    let eta = th.coulomb_project(&random(th.gauge_len(), 1.0, &mut rng), &opts).unwrap();
    assert!(th.coulomb_connection_apply(&zero, &eta, &opts).unwrap().amax() < 1e-12);

    let a = random(th.gauge_len(), 0.5, &mut rng);
    let e = random(th.algebra_len(), 1.0, &mut rng);
    let de = th.covariant_derivative(&a, &e).unwrap();
    assert!((th.coulomb_connection_apply(&a, &de, &opts).unwrap() - &e).amax() < 1e-8);

    let ab = theory(LieAlgebraSpec::u1(), 3, 4);
    let mut lam = random(ab.algebra_len(), 1.0, &mut rng);
    let mean = lam.mean();
    lam.add_scalar_mut(-mean);
    let a = random(ab.gauge_len(), 1.0, &mut rng);
    let w = ab.coulomb_connection_apply(&a, &ab.gradient(&lam).unwrap(), &opts).unwrap();
    assert!((w - lam).amax() < 1e-9);
}

#[test]
fn horizontal_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = SolverOptions::default();
    let th = su2(2, 3);
    let a = th.coulomb_project(&random(th.gauge_len(), 0.5, &mut rng), &opts).unwrap();
    assert!(th.coulomb_residual(&a) < 1e-12);
    let w = random(th.gauge_len(), 1.0, &mut rng);
    let nw = th.n_apply(&a, &w, &opts).unwrap();
    assert!(th.coulomb_residual(&nw) < 1e-10);
    assert!((th.n_apply(&a, &nw, &opts).unwrap() - &nw).amax() < 1e-10);
    let e = th.restricted(random(th.algebra_len(), 1.0, &mut rng));
    assert!(th.n_apply(&a, &th.d_raw(&a, &e), &opts).unwrap().amax() < 1e-10);
}

#[test]
fn abelian_field_equations_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let th = theory(LieAlgebraSpec::u1(), 3, 3);
    let s = random_state(&th, &mut rng, 1.0, 1.0);
    let r = ym_wong_rhs(&th, &s, &RhsOptions::default(), &SolverOptions::default()).unwrap();
    let all = r
        .christoffel
        .iter()
        .chain(&r.curvature_terms)
        .chain(&r.gamma_terms)
        .chain(std::iter::once(&r.constraint_curvature))
        .chain(std::iter::once(&r.dv));
    for t in all {
        assert!(t.iter().all(|x| *x == 0.0));
    }
    assert!(r.vertical.iter().chain(std::iter::once(&r.dp)).all(|t| t.iter().all(|x| *x == 0.0)));
}

#[test]
fn zero_momentum_leaves_only_christoffel() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let th = su2(2, 3);
    let mut s = random_state(&th, &mut rng, 0.5, 1.0);
    s.p.fill(0.0);
    let r = ym_wong_rhs(&th, &s, &RhsOptions::default(), &SolverOptions::default()).unwrap();
    assert!(r.dp.iter().all(|x| *x == 0.0));
    for t in r.curvature_terms.iter().chain(&r.gamma_terms) {
        assert!(t.iter().all(|x| *x == 0.0));
    }
    assert!((&r.dv - r.christoffel_sum()).amax() == 0.0);
    assert!(r.christoffel_sum().amax() > 1e-3);
}

#[test]
fn state_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let th = su2(2, 2);
    let opts = SolverOptions::default();
    let s = random_state(&th, &mut rng, 0.5, 1.0);
    let mut off = s.clone();
    off.q_star[0] += 0.1;
    assert!(matches!(ym_wong_rhs(&th, &off, &RhsOptions::default(), &opts), Err(WongError::ConstraintViolated(_))));
    let mut charged = s.clone();
    charged.p[0] = 1.0;
    assert!(matches!(ym_wong_rhs(&th, &charged, &RhsOptions::default(), &opts), Err(WongError::ConstraintViolated(_))));
}

fn bridge_case(d: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let th = su2(d, 2);
    let sys = to_chart_system(&th, BridgeGroup::Restricted).unwrap();
    let s = random_state(&th, &mut rng, 0.5, 1.0);
    let r = ym_wong_rhs(&th, &s, &RhsOptions::default(), &SolverOptions::default()).unwrap();
    let flat_state = WongState::new(s.q_star.clone(), s.v.clone(), th.compress_restricted(&s.p));
    let g = wong_rhs_flat(&sys, &flat_state, &RhsOptions::default()).unwrap();
    let tol = 1e-8;
    let rep = bridge_discrepancy(&th, &sys, &s, &RhsOptions::default(), &SolverOptions::default()).unwrap();
    assert!(rep.max() < tol, "{rep:?}");
    assert!((r.christoffel_sum() - &g.christoffel).amax() < tol);
    for i in 0..6 {
        assert!((&r.curvature_terms[i] - &g.curvature_terms[i]).amax() < tol, "curvature term {i}");
    }
    for i in 0..2 {
        assert!((&r.gamma_terms[i] - &g.gamma_terms[i]).amax() < tol, "gamma term {i}");
    }
    assert!((&r.constraint_curvature - &g.constraint_curvature).amax() < tol);
    assert!((&r.dv - &g.dv).amax() < tol);
    assert!((th.compress_restricted(&r.dp) - &g.dp).amax() < tol);
}

#[test]
fn bridge_matches_generic_pipeline_2d() {
    bridge_case(2, 13);
}

#[test]
fn bridge_matches_generic_pipeline_3d() {
    bridge_case(3, 14);
}

#[test]
fn bridge_killing_fields() {
    let ab = theory(LieAlgebraSpec::u1(), 2, 2);
    let sys = to_chart_system(&ab, BridgeGroup::Full).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let q = random(ab.gauge_len(), 1.0, &mut rng);
    let k = sys.killing(&q).unwrap();
    for y in 0..4 {
        let mut delta = ab.algebra_zeros();
        delta[y] = 1.0;
        assert_eq!(k.column(y).into_owned(), ab.gradient(&delta).unwrap());
    }
    assert_eq!(sys.bracket_residual(&q).unwrap(), 0.0);
    assert_eq!(sys.killing_residual(&q).unwrap(), 0.0);

    let th = su2(2, 2);
    let sys = to_chart_system(&th, BridgeGroup::Full).unwrap();
    let q = random(th.gauge_len(), 1.0, &mut rng);
    assert_eq!(sys.killing_residual(&q).unwrap(), 0.0);
    // difference quotients of pointwise products miss the Leibniz rule, so
    // site generators only close up to O(1/h)
    assert!(sys.bracket_residual(&q).unwrap() > 0.1);
}

#[test]
fn full_group_divergence_is_redundant() {
    let th = su2(2, 2);
    let sys = to_chart_system(&th, BridgeGroup::Full).unwrap();
    let j = sys.constraint_jac(&th.gauge_zeros()).unwrap();
    let rank = j.clone().svd(false, false).rank(1e-10);
    assert_eq!(rank, j.nrows() - 3);
    let restricted = to_chart_system(&th, BridgeGroup::Restricted).unwrap();
    let j = restricted.constraint_jac(&th.gauge_zeros()).unwrap();
    assert_eq!(j.clone().svd(false, false).rank(1e-10), j.nrows());
}

#[test]
fn bridge_size_limit() {
    let th = su2(3, 4);
    assert!(matches!(to_chart_system(&th, BridgeGroup::Restricted), Err(WongError::TooLarge(576))));
}

#[test]
fn abelian_motion_is_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let th = theory(LieAlgebraSpec::u1(), 2, 3);
    let s = random_state(&th, &mut rng, 1.0, 1.0);
    let tr = ym_integrate(&th, &s, 1e-2, 50, &YmOptions::default()).unwrap();
    let last = tr.states.last().unwrap();
    assert!((&last.q_star - (&s.q_star + &s.v * 0.5)).amax() < 1e-12);
    assert_eq!(last.p, s.p);
}

#[test]
fn su2_run_keeps_coulomb_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let th = su2(2, 2);
    let s = random_state(&th, &mut rng, 0.3, 0.3);
    let tr = ym_integrate(&th, &s, 1e-3, 1000, &YmOptions::default()).unwrap();
    assert!(tr.max_coulomb_residual() < 1e-8);
    assert!(tr.diagnostics.iter().all(|d| d.coulomb_drift < 1e-8));
}

#[test]
fn site_generators_spoil_the_killing_expansion() {
    // Difference quotients do not obey the Leibniz rule, so the lattice
    // generators do not close. The expansion in Killing fields then differs
    // from the general curvature form, and only the latter conserves energy.
    use crate::wong::{integrate, IntegrateOptions};
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let th = su2(2, 2);
    let s = random_state(&th, &mut rng, 0.3, 0.3);
    let sys = to_chart_system(&th, BridgeGroup::Restricted).unwrap();
    let ws = WongState::new(s.q_star.clone(), s.v.clone(), th.compress_restricted(&s.p));
    let (dv, _) = wong_rhs(&sys, &ws, &RhsOptions::default()).unwrap();
    let flat = wong_rhs_flat(&sys, &ws, &RhsOptions::default()).unwrap();
    assert!((dv - flat.dv).amax() > 1e-4);
    let general = integrate(&sys, &ws, 1e-3, 100, &IntegrateOptions::default()).unwrap();
    assert!(general.energy_drift() < 1e-12);
    let tr = ym_integrate(&th, &s, 1e-3, 100, &YmOptions::default()).unwrap();
    assert!(tr.energy_drift() > 1e-5);
}

#[test]
fn energy_agrees_with_generic_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let th = su2(2, 2);
    let sys = to_chart_system(&th, BridgeGroup::Restricted).unwrap();
    let s = random_state(&th, &mut rng, 0.5, 1.0);
    let e = ym_energy(&th, &s, &SolverOptions::default()).unwrap();
    let g = crate::wong::energy(&sys, &WongState::new(s.q_star.clone(), s.v.clone(), th.compress_restricted(&s.p))).unwrap();
    assert!((e - g).abs() < 1e-10 * g.abs());
}

#[test]
fn snapshot_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let th = su2(2, 3);
    let a = random(th.gauge_len(), 1.0, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    write_snapshot(&path, &Snapshot::gauge(&th, &a).unwrap()).unwrap();
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back.field(&th).unwrap(), a);
    assert!(matches!(back.field(&su2(2, 4)), Err(WongError::ShapeMismatch(_))));
}

#[test]
fn lattice_validation() {
    assert!(Lattice::new(1, 4, 1.0).is_err());
    assert!(Lattice::new(2, 1, 1.0).is_err());
    assert!(Lattice::new(2, 4, 0.0).is_err());
    let lat = Lattice::new(3, 4, 1.0).unwrap();
    for x in 0..lat.sites() {
        assert_eq!(lat.site(&lat.coords(x)), x);
        for i in 0..3 {
            assert_eq!(lat.backward(lat.forward(x, i), i), x);
        }
    }
}

#[test]
fn constant_kernel_detection() {
    let th = su2(2, 3);
    let mut a = th.gauge_zeros();
    // field along the third generator leaves rotations about it unbroken
    for link in 0..th.lattice.sites() * 2 {
        a[link * 3 + 2] = 0.4;
    }
    let zm = ZeroModes::at(&th, &a);
    assert_eq!(zm.dim(), 1);
    let col: DMatrix<f64> = zm.0.clone();
    assert!((col[(2, 0)].abs() - 1.0 / 3.0).abs() < 1e-12);
}


proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]

    #[test]
    fn operators_are_adjoint(seed in proptest::prelude::any::<u64>(), d in 2usize..4, l in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let th = su2(d, l);
        let a = random(th.gauge_len(), 1.0, &mut rng);
        let w = random(th.gauge_len(), 1.0, &mut rng);
        let e = random(th.algebra_len(), 1.0, &mut rng);
        let lhs = th.divergence(&w).unwrap().dot(&e);
        let rhs = -w.dot(&th.gradient(&e).unwrap());
        proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let de = th.covariant_derivative(&a, &e).unwrap();
        let dtw = th.covariant_adjoint(&a, &w).unwrap();
        proptest::prop_assert!((th.gauge_inner(&de, &w) - th.lattice.volume_element() * e.dot(&dtw)).abs() <= 1e-10 * (1.0 + de.norm() * w.norm()));
        proptest::prop_assert!(e.dot(&th.orbit_apply(&a, &e).unwrap()) >= -1e-12);
    }
}
