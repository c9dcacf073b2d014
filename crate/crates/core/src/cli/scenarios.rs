use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{RunConfig, Scenario};
use super::{Monitor, Report};
use crate::chart_system::{sample_point, ChartSystem};
use crate::error::Result;
use crate::lattice::{bridge_discrepancy, to_chart_system, write_ym_csv, ym_integrate, BridgeGroup, BridgeReport};
use crate::oracle::{compare, GroupChart};
use crate::reduction::{pseudoinverse_check, ReductionData};
use crate::wong::{integrate, project_constraint, random_section_state, write_csv, ProjectionOptions, RunSummary, WongState};

pub(super) fn dispatch(scenario: Scenario, cfg: &RunConfig, out: &Path) -> Result<Report> {
    match scenario {
        Scenario::Run => run(cfg, out),
        Scenario::Check => check(cfg),
        Scenario::CompareOracle => compare_oracle(cfg),
        Scenario::YmRun => ym_run(cfg, out),
        Scenario::YmBridgeCheck => ym_bridge_check(cfg),
    }
}

pub(crate) fn initial_state(cfg: &RunConfig, sys: &ChartSystem, rng: &mut ChaCha8Rng) -> Result<WongState> {
    let Some(st) = &cfg.state else {
        return random_section_state(sys, rng, cfg.speed);
    };
    let q = DVector::from_vec(st.q_star.clone());
    let v = DVector::from_vec(st.v.clone());
    match (&st.p, &st.z_v) {
        (Some(p), _) => Ok(WongState::new(q, v, DVector::from_vec(p.clone()))),
        (None, Some(z)) => WongState::from_vertical_velocity(sys, q, v, &DVector::from_vec(z.clone())),
        (None, None) => unreachable!("rejected by validation"),
    }
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let sys = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s0 = initial_state(cfg, &sys, &mut rng)?;
    let it = &cfg.integrator;
    let opts = it.options();
    let traj = integrate(&sys, &s0, it.dt, it.n_steps, &opts)?;
    let path = out.join(&cfg.outputs.trajectory);
    write_csv(BufWriter::new(File::create(&path)?), &traj)?;

    let e0 = traj.diagnostics[0].energy;
    let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
    let tol = &cfg.tolerances;
    let monitors = vec![
        Monitor::series("energy_drift", &traj.times, traj.diagnostics.iter().map(|d| (d.energy - e0).abs() / scale), tol.energy),
        Monitor::series("chi_residual", &traj.times, traj.diagnostics.iter().map(|d| d.chi_residual), tol.constraint),
    ];
    let summary = RunSummary::new(sys.name(), sys.n_p(), sys.n_g(), it.dt, &opts, &traj, config_json(cfg));
    Ok(Report {
        monitors,
        files: vec![path],
        details: serde_json::to_value(summary).unwrap_or_default(),
    })
}

fn check(cfg: &RunConfig) -> Result<Report> {
    let sys = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let wide = ProjectionOptions {
        basin: f64::INFINITY,
        ..Default::default()
    };
    let (mut proj, mut pinv, mut kill, mut brk, mut horiz) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        let q = sample_point(sys.name(), &mut rng)?;
        let (q, _) = project_constraint(&sys, &q, &wide)?;
        let d = ReductionData::compute(&sys, &q)?;
        proj = proj.max(d.projector_residual());
        pinv = pinv.max(pseudoinverse_check(&sys, &q)?);
        kill = kill.max(sys.killing_residual(&q)?);
        brk = brk.max(sys.bracket_residual(&q)?);
        if sys.is_flat() {
            horiz = horiz.max(d.curvature_horizontality());
        }
    }
    let tol = &cfg.tolerances;
    let mut monitors = vec![
        Monitor::new("projector_residual", proj, tol.projector),
        Monitor::new("pseudoinverse_residual", pinv, tol.pseudoinverse),
        Monitor::new("killing_residual", kill, tol.killing),
        Monitor::new("bracket_residual", brk, tol.killing),
    ];
    if sys.is_flat() {
        monitors.push(Monitor::new("flat_curvature_horizontality", horiz, tol.horizontality));
    }
    Ok(Report {
        monitors,
        files: Vec::new(),
        details: json!({ "samples": cfg.samples, "n_p": sys.n_p(), "n_g": sys.n_g(), "flat": sys.is_flat() }),
    })
}

fn compare_oracle(cfg: &RunConfig) -> Result<Report> {
    let sys = cfg.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s0 = initial_state(cfg, &sys, &mut rng)?;
    let chart = GroupChart::new(sys.algebra_handle());
    let it = &cfg.integrator;
    let rep = compare(&sys, &chart, &s0, it.dt, it.n_steps, &it.options(), cfg.raise)?;
    let tol = &cfg.tolerances;
    let monitors = vec![
        Monitor::new("max_deviation", rep.max_deviation, tol.oracle),
        Monitor::new("oracle_energy_drift", rep.oracle_energy_drift, tol.energy),
        Monitor::new("wong_energy_drift", rep.wong_energy_drift, tol.energy),
        Monitor::new("max_reconstruction", rep.max_reconstruction, tol.oracle),
    ];
    Ok(Report {
        monitors,
        files: Vec::new(),
        details: serde_json::to_value(rep).unwrap_or_default(),
    })
}

fn ym_run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let lat = cfg.lattice.clone().unwrap_or_default();
    let th = lat.theory()?;
    let opts = cfg.ym_options();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s0 = th.random_state(&mut rng, lat.amplitude, lat.speed, &opts.solver)?;
    let it = &cfg.integrator;
    let traj = ym_integrate(&th, &s0, it.dt, it.n_steps, &opts)?;
    let path = out.join(&cfg.outputs.trajectory);
    write_ym_csv(BufWriter::new(File::create(&path)?), &traj)?;

    let e0 = traj.diagnostics[0].energy;
    let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
    let tol = &cfg.tolerances;
    let monitors = vec![
        Monitor::series("coulomb_residual", &traj.times, traj.diagnostics.iter().map(|d| d.coulomb_residual), tol.coulomb),
        Monitor::series("energy_drift", &traj.times, traj.diagnostics.iter().map(|d| (d.energy - e0).abs() / scale), tol.ym_energy),
    ];
    Ok(Report {
        monitors,
        files: vec![path],
        details: json!({
            "lattice": lat,
            "dt": it.dt,
            "n_steps": it.n_steps,
            "final_time": traj.times.last(),
            "initial_energy": e0,
            "max_coulomb_drift": traj.diagnostics.iter().map(|d| d.coulomb_drift).fold(0.0, f64::max),
            "config": config_json(cfg),
        }),
    })
}

fn ym_bridge_check(cfg: &RunConfig) -> Result<Report> {
    let lat = cfg.lattice.clone().unwrap_or_default();
    let th = lat.theory()?;
    let sys = to_chart_system(&th, BridgeGroup::Restricted)?;
    let rhs = cfg.integrator.rhs_options();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = BridgeReport::default();
    for _ in 0..cfg.samples.max(1) {
        let s = th.random_state(&mut rng, lat.amplitude, lat.speed, &cfg.solver)?;
        worst.merge(&bridge_discrepancy(&th, &sys, &s, &rhs, &cfg.solver)?);
    }
    Ok(Report {
        monitors: vec![Monitor::new("bridge_max_difference", worst.max(), cfg.tolerances.bridge)],
        files: Vec::new(),
        details: json!({ "lattice": lat, "samples": cfg.samples.max(1), "terms": worst }),
    })
}
