//! Run configuration files (TOML, or JSON by extension).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chart_system::{builtin, kk_trivial, ChartSystem, KkPotential};
use crate::error::{Result, WongError};
use crate::lattice::{Lattice, LatticeTheory, SolverOptions, YmOptions};
use crate::lie_algebra::LieAlgebraSpec;
use crate::oracle::Raise;
use crate::wong::{IntegrateOptions, Method, ProjectionOptions, RhsOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Run,
    Check,
    CompareOracle,
    YmRun,
    YmBridgeCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Run => "run",
            Scenario::Check => "check",
            Scenario::CompareOracle => "compare-oracle",
            Scenario::YmRun => "ym-run",
            Scenario::YmBridgeCheck => "ym-bridge-check",
        }
    }

    fn needs_lattice(self) -> bool {
        matches!(self, Scenario::YmRun | Scenario::YmBridgeCheck)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Rk4,
    Adaptive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: MethodName,
    /// Time step (output interval for the adaptive method).
    pub dt: f64,
    pub n_steps: usize,
    pub projection: bool,
    pub rtol: f64,
    pub atol: f64,
    pub extra_vertical_term: bool,
    pub flat_path: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: MethodName::Rk4,
            dt: 1e-3,
            n_steps: 1000,
            projection: true,
            rtol: 1e-10,
            atol: 1e-12,
            extra_vertical_term: false,
            flat_path: false,
        }
    }
}

impl IntegratorConfig {
    pub fn rhs_options(&self) -> RhsOptions {
        RhsOptions {
            extra_vertical_term: self.extra_vertical_term,
            flat_path: self.flat_path,
            ..Default::default()
        }
    }

    pub fn options(&self) -> IntegrateOptions {
        IntegrateOptions {
            rhs: self.rhs_options(),
            method: match self.method {
                MethodName::Rk4 => Method::Rk4,
                MethodName::Adaptive => Method::Adaptive {
                    rtol: self.rtol,
                    atol: self.atol,
                },
            },
            projection: ProjectionOptions {
                enabled: self.projection,
                ..Default::default()
            },
        }
    }
}

/// Explicit initial state; `p` and `z_v` are alternatives.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub q_star: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub z_v: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub d: usize,
    pub extent: usize,
    pub spacing: f64,
    /// `su2` or `u1`.
    pub group: String,
    /// Half-width of the uniform random field before Coulomb projection.
    pub amplitude: f64,
    pub speed: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            d: 2,
            extent: 2,
            spacing: 1.0,
            group: "su2".into(),
            amplitude: 0.3,
            speed: 0.3,
        }
    }
}

impl LatticeConfig {
    pub fn theory(&self) -> Result<LatticeTheory> {
        let alg = match self.group.as_str() {
            "su2" => LieAlgebraSpec::su2(),
            "so3" => LieAlgebraSpec::so3(),
            "u1" => LieAlgebraSpec::u1(),
            g => return Err(WongError::Config(format!("unknown lattice group `{g}`"))),
        };
        Ok(LatticeTheory::new(Lattice::new(self.d, self.extent, self.spacing)?, alg))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub trajectory: PathBuf,
    pub diagnostics: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            diagnostics: "diagnostics.json".into(),
        }
    }
}

/// Monitor thresholds; `None` disables a monitor.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub energy: Option<f64>,
    pub constraint: Option<f64>,
    pub oracle: Option<f64>,
    pub projector: Option<f64>,
    pub pseudoinverse: Option<f64>,
    pub killing: Option<f64>,
    pub horizontality: Option<f64>,
    pub bridge: Option<f64>,
    pub coulomb: Option<f64>,
    pub ym_energy: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy: Some(1e-6),
            constraint: Some(1e-8),
            oracle: Some(1e-5),
            projector: Some(1e-10),
            pseudoinverse: Some(1e-8),
            killing: Some(1e-8),
            horizontality: Some(1e-8),
            bridge: Some(1e-8),
            coulomb: Some(1e-8),
            ym_energy: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required inside sweeps; otherwise the subcommand decides.
    pub scenario: Option<Scenario>,
    /// Builtin system name.
    pub system: Option<String>,
    /// Uniform field strength for `kk_trivial_u1`.
    pub field_strength: Option<f64>,
    pub lattice: Option<LatticeConfig>,
    pub state: Option<StateConfig>,
    pub integrator: IntegratorConfig,
    pub outputs: OutputConfig,
    /// Seed of the single PRNG behind every random choice.
    pub seed: u64,
    /// Random points (check) or states (bridge check).
    pub samples: usize,
    /// Speed scale of random initial velocities.
    pub speed: f64,
    pub raise: Raise,
    pub solver: SolverOptions,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            system: None,
            field_strength: None,
            lattice: None,
            state: None,
            integrator: IntegratorConfig::default(),
            outputs: OutputConfig::default(),
            seed: 0,
            samples: 20,
            speed: 1.0,
            raise: Raise::default(),
            solver: SolverOptions::default(),
            tolerances: Tolerances::default(),
        }
    }
}

pub(crate) fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| WongError::Config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| WongError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| WongError::Config(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        parse(path.as_ref())
    }

    /// Checks everything that can be checked before computing.
    pub fn validate(&self, scenario: Scenario) -> Result<()> {
        let it = &self.integrator;
        if !(it.dt > 0.0 && it.dt.is_finite()) {
            return Err(WongError::Config(format!("integrator.dt must be positive, got {}", it.dt)));
        }
        if it.n_steps == 0 && matches!(scenario, Scenario::Run | Scenario::CompareOracle | Scenario::YmRun) {
            return Err(WongError::Config("integrator.n_steps must be at least 1".into()));
        }
        if it.method == MethodName::Adaptive && !(it.rtol > 0.0 && it.atol > 0.0) {
            return Err(WongError::Config("adaptive tolerances must be positive".into()));
        }
        if scenario.needs_lattice() {
            let lat = self.lattice.clone().unwrap_or_default();
            lat.theory()?;
            if self.state.is_some() {
                return Err(WongError::Config("lattice scenarios take random initial states; remove [state]".into()));
            }
            return Ok(());
        }
        let sys = self.system()?;
        if let Some(st) = &self.state {
            let (np, ng) = (sys.n_p(), sys.n_g());
            if st.q_star.len() != np || st.v.len() != np {
                return Err(WongError::Config(format!("state.q_star and state.v must have length {np} for {}", sys.name())));
            }
            match (&st.p, &st.z_v) {
                (Some(p), None) if p.len() == ng => {}
                (None, Some(z)) if z.len() == ng => {}
                (None, None) => return Err(WongError::Config("state needs p or z_v".into())),
                (Some(_), Some(_)) => return Err(WongError::Config("state takes p or z_v, not both".into())),
                _ => return Err(WongError::Config(format!("state.p / state.z_v must have length {ng}"))),
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<ChartSystem> {
        let name = self.system.as_deref().ok_or_else(|| WongError::Config("no system given".into()))?;
        match (name, self.field_strength) {
            ("kk_trivial_u1", Some(b)) => kk_trivial(name, LieAlgebraSpec::u1(), KkPotential::uniform_field(1, 2, 0, b)),
            (_, Some(_)) => Err(WongError::Config("field_strength only applies to kk_trivial_u1".into())),
            _ => builtin(name).map_err(|e| WongError::Config(e.to_string())),
        }
    }

    pub fn ym_options(&self) -> YmOptions {
        YmOptions {
            rhs: self.integrator.rhs_options(),
            solver: self.solver,
            project: self.integrator.projection,
        }
    }
}
