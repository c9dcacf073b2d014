use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wong_core::cli::{execute, run_sweep, LatticeConfig, Outcome, RunConfig, Scenario, SweepConfig};

#[derive(Parser)]
#[command(name = "wong", version, about = "Reduced geodesic dynamics with internal symmetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for trajectories and reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the reduced equations.
    Run(Common),
    /// Projector, pseudoinverse and Killing-field identities at sampled points.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: Option<String>,
    },
    /// Integrate alongside the full-space reference integrator.
    CompareOracle(Common),
    /// Integrate the lattice field equations.
    YmRun(Common),
    /// Compare the lattice right-hand side with the generic pipeline.
    YmBridgeCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long = "L")]
        extent: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        group: Option<String>,
    },
    /// Run a batch of configurations in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load(path: Option<&Path>) -> Result<RunConfig, wong_core::WongError> {
    match path {
        Some(p) => RunConfig::from_path(p),
        None => Ok(RunConfig::default()),
    }
}

fn report(scenario: Scenario, common: &Common, tweak: impl FnOnce(&mut RunConfig)) -> i32 {
    let outcome = match load(common.config.as_deref()) {
        Ok(mut cfg) => {
            tweak(&mut cfg);
            execute(scenario, &cfg, &common.out)
        }
        Err(e) => Outcome::from_error(scenario.name(), None, &e),
    };
    print(&outcome);
    outcome.exit_code()
}

fn print(value: &impl serde::Serialize) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => {
            let _ = writeln!(std::io::stdout().lock(), "{s}");
        }
        Err(e) => eprintln!("{e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(c) => report(Scenario::Run, &c, |_| {}),
        Command::Check { common, system } => report(Scenario::Check, &common, |cfg| {
            if system.is_some() {
                cfg.system = system;
            }
        }),
        Command::CompareOracle(c) => report(Scenario::CompareOracle, &c, |_| {}),
        Command::YmRun(c) => report(Scenario::YmRun, &c, |_| {}),
        Command::YmBridgeCheck { common, extent, d, group } => report(Scenario::YmBridgeCheck, &common, |cfg| {
            let lat = cfg.lattice.get_or_insert_with(LatticeConfig::default);
            lat.extent = extent.unwrap_or(lat.extent);
            lat.d = d.unwrap_or(lat.d);
            if let Some(g) = group {
                lat.group = g;
            }
        }),
        Command::Sweep { config, out } => match SweepConfig::from_path(&config) {
            Ok(cfg) => {
                let o = run_sweep(&cfg, &out);
                print(&o);
                o.exit_code()
            }
            Err(e) => {
                let o = Outcome::from_error("sweep", None, &e);
                print(&o);
                o.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
