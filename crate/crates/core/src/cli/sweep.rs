//! Batches of runs and the time-step refinement study.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{parse, MethodName, RunConfig, Scenario};
use super::scenarios::initial_state;
use super::{execute, write_json, Monitor, Outcome, Status};
use crate::error::{Result, WongError};
use crate::wong::integrate;

/// Refinement study: the same run at `dt, dt/2, ..., dt/2^(levels-1)` over a
/// fixed final time.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    pub run: RunConfig,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Accepted range of observed orders.
    #[serde(default = "default_range")]
    pub range: [f64; 2],
}

fn default_levels() -> usize {
    3
}

fn default_range() -> [f64; 2] {
    [3.8, 4.2]
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub runs: Vec<RunConfig>,
    pub order: Option<OrderConfig>,
}

impl SweepConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        parse(path.as_ref())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub dts: Vec<f64>,
    /// Max-norm differences of final states at successive refinements.
    pub differences: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Observed convergence order of the fixed-step integrator.
pub fn order_study(cfg: &OrderConfig) -> Result<OrderReport> {
    let run = &cfg.run;
    run.validate(Scenario::Run)?;
    if run.integrator.method != MethodName::Rk4 {
        return Err(WongError::Config("order study needs the fixed-step method".into()));
    }
    if cfg.levels < 3 {
        return Err(WongError::Config("order study needs at least 3 levels".into()));
    }
    let sys = run.system()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let s0 = initial_state(run, &sys, &mut rng)?;
    let opts = run.integrator.options();
    let mut dts = Vec::new();
    let mut finals = Vec::new();
    for k in 0..cfg.levels {
        let m = 1usize << k;
        let dt = run.integrator.dt / m as f64;
        let traj = integrate(&sys, &s0, dt, run.integrator.n_steps * m, &opts)?;
        dts.push(dt);
        finals.push(traj.last().expect("trajectory has the initial state").pack());
    }
    let differences: Vec<f64> = finals.windows(2).map(|w| (&w[0] - &w[1]).amax()).collect();
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(OrderReport { dts, differences, orders })
}

fn order_outcome(cfg: &OrderConfig) -> Outcome {
    let system = cfg.run.system.clone();
    match order_study(cfg) {
        Ok(rep) => {
            let [lo, hi] = cfg.range;
            let monitors: Vec<Monitor> = rep
                .orders
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let mut m = Monitor::new(&format!("observed_order_{i}"), p, None);
                    m.ok = (lo..=hi).contains(&p);
                    m
                })
                .collect();
            Outcome {
                scenario: "order".into(),
                system,
                status: if monitors.iter().all(|m| m.ok) { Status::Passed } else { Status::Failed },
                monitors,
                error: None,
                failed_at: None,
                files: Vec::new(),
                details: serde_json::to_value(rep).unwrap_or_default(),
            }
        }
        Err(e) => Outcome::from_error("order", system, &e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutcome {
    pub status: Status,
    pub runs: Vec<Outcome>,
    pub order: Option<Outcome>,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

fn threads() -> Option<usize> {
    std::env::var("WONG_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs every entry in parallel into `out/run_<i>`; one failing entry does
/// not stop the others. Writes `out/sweep.json`.
pub fn run_sweep(cfg: &SweepConfig, out: &Path) -> SweepOutcome {
    let job = || -> (Vec<Outcome>, Option<Outcome>) {
        let runs = cfg
            .runs
            .par_iter()
            .enumerate()
            .map(|(i, run)| match run.scenario {
                Some(sc) => execute(sc, run, &out.join(format!("run_{i}"))),
                None => Outcome::from_error("unknown", run.system.clone(), &WongError::Config(format!("sweep entry {i} has no scenario"))),
            })
            .collect();
        let order = cfg.order.as_ref().map(order_outcome);
        (runs, order)
    };
    let (runs, order) = match threads().map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(job),
        _ => job(),
    };
    let all = runs.iter().chain(order.iter()).all(Outcome::passed);
    let status = if all { Status::Passed } else { Status::Failed };
    let mut outcome = SweepOutcome { status, runs, order };
    if let Err(e) = write_json(&out.join("sweep.json"), &outcome) {
        eprintln!("could not write sweep report: {e}");
        outcome.status = Status::Failed;
    }
    outcome
}
