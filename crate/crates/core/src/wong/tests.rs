use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::chart_system::{builtin, kk_trivial, KkPotential, BUILTIN_NAMES};
use crate::lie_algebra::LieAlgebraSpec;

pub(crate) fn section_state(sys: &ChartSystem, rng: &mut ChaCha8Rng, speed: f64) -> WongState {
    random_section_state(sys, rng, speed).unwrap()
}

fn state(q: &[f64], v: &[f64], p: &[f64]) -> WongState {
    WongState::new(DVector::from_column_slice(q), DVector::from_column_slice(v), DVector::from_column_slice(p))
}

#[test]
fn abelian_momentum_is_exactly_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for name in ["so2_halfplane", "hopf_s3", "kk_trivial_u1"] {
        let sys = builtin(name).unwrap();
        let s = section_state(&sys, &mut rng, 1.0);
        let (_, dp) = wong_rhs(&sys, &s, &RhsOptions::default()).unwrap();
        assert!(dp.iter().all(|x| *x == 0.0));
        let traj = integrate(&sys, &s, 1e-2, 20, &IntegrateOptions::default()).unwrap();
        assert!(traj.states.iter().all(|t| t.p == s.p));
    }
}

#[test]
fn cyclotron_acceleration() {
    let (b, q0) = (0.7, 1.5);
    let sys = kk_trivial("cyc", LieAlgebraSpec::u1(), KkPotential::uniform_field(1, 2, 0, b)).unwrap();
    let s = state(&[0.3, -0.4, 0.0], &[0.2, 0.5, 0.0], &[q0]);
    let (dv, dp) = wong_rhs(&sys, &s, &RhsOptions::default()).unwrap();
    let expected = [q0 * b * 0.5, -q0 * b * 0.2, 0.0];
    for i in 0..3 {
        assert!((dv[i] - expected[i]).abs() < 1e-10, "{dv}");
    }
    assert_eq!(dp[0], 0.0);
}

#[test]
fn cyclotron_orbit_closes() {
    let (b, q0) = (1.0, 2.0);
    let sys = kk_trivial("cyc", LieAlgebraSpec::u1(), KkPotential::uniform_field(1, 2, 0, b)).unwrap();
    let s = state(&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0], &[q0]);
    let period = 2.0 * std::f64::consts::PI / (q0 * b);
    let n = 2000;
    let traj = integrate(&sys, &s, period / n as f64, n, &IntegrateOptions::default()).unwrap();
    let end = traj.last().unwrap();
    assert!((&end.q_star - &s.q_star).amax() < 1e-6);
}

#[test]
fn hopf_fiber_momentum_is_an_equilibrium() {
    let sys = builtin("hopf_s3").unwrap();
    let s = state(&[0.4, 0.0, 0.3], &[0.0, 0.0, 0.0], &[0.8]);
    let (dv, dp) = wong_rhs(&sys, &s, &RhsOptions::default()).unwrap();
    assert!(dv.amax() < 1e-14 && dp.amax() == 0.0);
    let e = energy(&sys, &state(&[0.4, 0.0, 0.3], &[0.0; 3], &[1.0])).unwrap();
    assert!((e - 0.5).abs() < 1e-14);
}

#[test]
fn rest_state_stays_put() {
    let sys = builtin("su2_twovector").unwrap();
    let s = state(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0], &[0.0; 6], &[0.0; 3]);
    let traj = integrate(&sys, &s, 1e-2, 50, &IntegrateOptions::default()).unwrap();
    assert!(traj.states.iter().all(|t| (&t.q_star - &s.q_star).amax() < 1e-15));
    assert_eq!(energy(&sys, &s).unwrap(), 0.0);
}

#[test]
fn time_reversal_returns_home() {
    let sys = builtin("su2_twovector").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s0 = section_state(&sys, &mut rng, 0.5);
    let opts = IntegrateOptions::default();
    let fwd = integrate(&sys, &s0, 1e-3, 100, &opts).unwrap();
    let mut back = fwd.last().unwrap().clone();
    back.v = -back.v;
    back.p = -back.p;
    let bwd = integrate(&sys, &back, 1e-3, 100, &opts).unwrap();
    let end = bwd.last().unwrap();
    assert!((&end.q_star - &s0.q_star).amax() < 1e-8);
    assert!((&end.v + &s0.v).amax() < 1e-8);
    assert!((&end.p + &s0.p).amax() < 1e-8);
}

#[test]
fn flat_and_general_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for name in ["so2_halfplane", "su2_twovector"] {
        let sys = builtin(name).unwrap();
        for _ in 0..50 {
            let s = section_state(&sys, &mut rng, 1.0);
            let general = wong_rhs_terms(&sys, &s, &RhsOptions::default()).unwrap();
            let flat = wong_rhs_flat(&sys, &s, &RhsOptions::default()).unwrap();
            assert!((&general.dv - &flat.dv).amax() <= 1e-8, "{name}: {}", (&general.dv - &flat.dv).amax());
            assert!((&general.dp - &flat.dp).amax() <= 1e-12);
        }
    }
}

#[test]
fn kernel_proportional_curvature_pieces_are_projected_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sys = builtin("su2_twovector").unwrap();
    let s = section_state(&sys, &mut rng, 1.0);
    let flat = wong_rhs_flat(&sys, &s, &RhsOptions::default()).unwrap();
    for i in [0, 1, 4, 5] {
        assert!(flat.curvature_terms[i].amax() < 1e-12);
    }
    assert!(flat.curvature_terms[2].amax() > 1e-3 && flat.curvature_terms[3].amax() > 1e-3);
}

#[test]
fn constraint_projection() {
    let sys = builtin("so2_halfplane").unwrap();
    let opts = ProjectionOptions::default();
    let q = DVector::from_vec(vec![2.0, 0.0]);
    assert_eq!(project_constraint(&sys, &q, &opts).unwrap(), (q.clone(), 0));
    let (p, its) = project_constraint(&sys, &DVector::from_vec(vec![2.0, 0.01]), &opts).unwrap();
    assert!((p - q).amax() <= 1e-12 && its <= 3);
    assert!(project_constraint(&sys, &DVector::from_vec(vec![2.0, 5.0]), &opts).is_err());
    let hopf = builtin("hopf_s3").unwrap();
    let near = project_constraint(&hopf, &DVector::from_vec(vec![1e-14, 0.01, 0.5]), &opts);
    assert!(matches!(near, Err(WongError::GribovHorizon { .. })), "{near:?}");
}

#[test]
fn projected_runs_stay_on_section() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for name in BUILTIN_NAMES {
        let sys = builtin(name).unwrap();
        let s = section_state(&sys, &mut rng, 0.5);
        let traj = integrate(&sys, &s, 1e-2, 100, &IntegrateOptions::default()).unwrap();
        assert!(traj.max_chi_residual() <= 1e-8, "{name}");
        assert!(traj.energy_drift() < 1e-6, "{name}: {}", traj.energy_drift());
    }
}

#[test]
fn adaptive_matches_fixed_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let sys = builtin("kk_trivial_su2").unwrap();
    let s = section_state(&sys, &mut rng, 0.5);
    let a = integrate(&sys, &s, 1e-3, 200, &IntegrateOptions::default()).unwrap();
    let opts = IntegrateOptions {
        method: Method::Adaptive { rtol: 1e-10, atol: 1e-12 },
        ..Default::default()
    };
    let b = integrate(&sys, &s, 0.05, 4, &opts).unwrap();
    let (ea, eb) = (a.last().unwrap(), b.last().unwrap());
    assert!((&ea.q_star - &eb.q_star).amax() < 1e-8);
    assert!((&ea.p - &eb.p).amax() < 1e-8);
}

#[test]
fn step_failure_reports_time() {
    let sys = builtin("hopf_s3").unwrap();
    // heads straight for the chart boundary
    let s = state(&[0.9, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0]);
    let err = integrate(&sys, &s, 1e-2, 1000, &IntegrateOptions::default()).unwrap_err();
    assert!(matches!(err, WongError::StepFailure { t, .. } if t > 0.0));
}

#[test]
fn csv_layout() {
    let sys = builtin("so2_halfplane").unwrap();
    let s = state(&[2.0, 0.0], &[0.1, 0.0], &[0.5]);
    let traj = integrate(&sys, &s, 0.1, 3, &IntegrateOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &traj).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,qstar_0,qstar_1,v_0,v_1,p_0,energy,chi_residual");
    assert_eq!(lines.count(), 4);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(50))]

    #[test]
    fn abelian_charge_has_exactly_zero_rate(seed in proptest::prelude::any::<u64>(), which in 0usize..3) {
        let sys = builtin(["so2_halfplane", "hopf_s3", "kk_trivial_u1"][which]).unwrap();
        let s = section_state(&sys, &mut ChaCha8Rng::seed_from_u64(seed), 1.0);
        let (_, dp) = wong_rhs(&sys, &s, &RhsOptions::default()).unwrap();
        proptest::prop_assert!(dp.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn flat_expansion_matches_general_form(seed in proptest::prelude::any::<u64>(), which in 0usize..2) {
        let sys = builtin(["so2_halfplane", "su2_twovector"][which]).unwrap();
        let s = section_state(&sys, &mut ChaCha8Rng::seed_from_u64(seed), 1.0);
        let (dv, dp) = wong_rhs(&sys, &s, &RhsOptions::default()).unwrap();
        let f = wong_rhs_flat(&sys, &s, &RhsOptions::default()).unwrap();
        proptest::prop_assert!((dv - &f.dv).amax() <= 1e-8);
        proptest::prop_assert!((dp - &f.dp).amax() <= 1e-8);
    }
}
