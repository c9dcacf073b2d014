use super::*;

fn toml_cfg(text: &str) -> RunConfig {
    toml::from_str(text).unwrap()
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = toml_cfg("system = \"hopf_s3\"");
    assert_eq!(cfg.integrator.dt, 1e-3);
    assert_eq!(cfg.tolerances.energy, Some(1e-6));
    assert!(cfg.validate(Scenario::Run).is_ok());
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(toml::from_str::<RunConfig>("system = \"hopf_s3\"\ndtt = 1").is_err());
}

#[test]
fn validation_catches_bad_input() {
    let mut cfg = toml_cfg("system = \"hopf_s3\"");
    cfg.integrator.dt = 0.0;
    assert!(cfg.validate(Scenario::Run).unwrap_err().is_config());
    cfg.integrator.dt = 0.1;
    cfg.integrator.n_steps = 0;
    assert!(cfg.validate(Scenario::Run).is_err());
    assert!(cfg.validate(Scenario::Check).is_ok());

    let cfg = toml_cfg("system = \"nope\"");
    assert!(cfg.validate(Scenario::Run).unwrap_err().is_config());

    let cfg = toml_cfg("system = \"hopf_s3\"\nfield_strength = 1.0");
    assert!(cfg.validate(Scenario::Run).is_err());

    let cfg = toml_cfg("system = \"hopf_s3\"\n[state]\nq_star = [0.4, 0.0, 0.3]\nv = [0.0, 0.0, 0.0]");
    assert!(cfg.validate(Scenario::Run).is_err());

    let cfg = toml_cfg("[lattice]\ngroup = \"su3\"");
    assert!(cfg.validate(Scenario::YmRun).is_err());
}

#[test]
fn vertical_velocity_sets_momentum() {
    let cfg = toml_cfg("system = \"kk_trivial_u1\"\n[state]\nq_star = [0.0, 0.0, 0.0]\nv = [0.0, 0.0, 0.0]\nz_v = [2.0]");
    let sys = cfg.system().unwrap();
    let mut rng = rand::SeedableRng::seed_from_u64(0);
    let s = scenarios::initial_state(&cfg, &sys, &mut rng).unwrap();
    let (gamma, _) = crate::reduction::orbit_metric(&sys, &s.q_star).unwrap();
    assert!((s.p[0] - 2.0 * gamma[(0, 0)]).abs() < 1e-14);
}

#[test]
fn monitor_series_records_first_crossing() {
    let m = Monitor::series("x", &[0.0, 1.0, 2.0, 3.0], [0.0, 0.5, 2.0, 1.0], Some(1.0));
    assert_eq!(m.value, 2.0);
    assert!(!m.ok);
    assert_eq!(m.exceeded_at, Some(2.0));
    let m = Monitor::series("x", &[0.0, 1.0], [0.0, f64::NAN], Some(1.0));
    assert!(!m.ok);
    assert_eq!(m.exceeded_at, Some(1.0));
    assert!(Monitor::new("y", 5.0, None).ok);
}

#[test]
fn run_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toml_cfg("system = \"so2_halfplane\"\nseed = 2\n[integrator]\ndt = 0.01\nn_steps = 20");
    let o = execute(Scenario::Run, &cfg, dir.path());
    assert!(o.passed(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "passed");
}

#[test]
fn exceeded_monitor_fails_with_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toml_cfg("system = \"su2_twovector\"\nseed = 2\n[integrator]\ndt = 0.2\nn_steps = 20\n[tolerances]\nenergy = 1e-14");
    cfg.integrator.extra_vertical_term = true;
    let o = execute(Scenario::Run, &cfg, dir.path());
    assert_eq!(o.exit_code(), 1);
    let m = o.monitors.iter().find(|m| m.name == "energy_drift").unwrap();
    assert!(m.exceeded_at.unwrap() > 0.0);
}

#[test]
fn sweep_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let sweep: SweepConfig = toml::from_str(
        "[[runs]]\nscenario = \"check\"\nsystem = \"so2_halfplane\"\nsamples = 3\n\
         [[runs]]\nscenario = \"check\"\nsystem = \"missing\"\n\
         [[runs]]\nsystem = \"so2_halfplane\"",
    )
    .unwrap();
    let o = run_sweep(&sweep, dir.path());
    assert!(o.runs[0].passed());
    assert_eq!(o.runs[1].status, Status::ConfigError);
    assert_eq!(o.runs[2].status, Status::ConfigError);
    assert_eq!(o.exit_code(), 1);
    assert!(dir.path().join("run_0/diagnostics.json").exists());
    assert!(dir.path().join("sweep.json").exists());

    let empty = run_sweep(&SweepConfig::default(), dir.path());
    assert_eq!(empty.exit_code(), 0);
}

#[test]
fn refinement_shows_fourth_order() {
    let cfg: OrderConfig = toml::from_str("levels = 3\n[run]\nsystem = \"so2_halfplane\"\nseed = 4\n[run.integrator]\ndt = 0.1\nn_steps = 10").unwrap();
    let rep = order_study(&cfg).unwrap();
    assert_eq!(rep.orders.len(), 1);
    assert!((rep.orders[0] - 4.0).abs() < 0.2, "{rep:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = toml_cfg("system = \"su2_twovector\"\nseed = 9\n[integrator]\ndt = 0.01\nn_steps = 30");
    let csv = |cfg: &RunConfig| {
        let dir = tempfile::tempdir().unwrap();
        assert!(execute(Scenario::Run, cfg, dir.path()).passed());
        std::fs::read(dir.path().join("trajectory.csv")).unwrap()
    };
    let first = csv(&cfg);
    assert_eq!(first, csv(&cfg));
    let mut other = cfg.clone();
    other.seed = 10;
    assert_ne!(first, csv(&other));
}
