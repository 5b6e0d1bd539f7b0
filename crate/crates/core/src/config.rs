//! Declarative run configuration: one JSON document per invocation.
//!
//! A config validates to exactly one of the three run shapes. Optional
//! fields carry the documented defaults; [`RunConfig::resolve`] fills them in
//! so that the configuration embedded in output files is fully explicit.
//! The output directory is accepted in config files but never serialized
//! back, keeping outputs byte-identical regardless of where they are written.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus1d::{Predator1D, Sim1DParams, DEFAULT_EPS_SS, DEFAULT_T_MAX};
use crate::flock::{FlockParams, PredatorND};
use crate::sweep::{default_grid_1d, default_grid_flock, Objective, SweepConfig, SweepModel};
use nalgebra::Vector3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path} does not match the schema: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn default_eps_ss() -> f64 {
    DEFAULT_EPS_SS
}
fn default_t_max() -> usize {
    DEFAULT_T_MAX
}
fn default_dim() -> usize {
    2
}
fn default_box_side() -> f64 {
    100.0
}
fn default_v0() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    0.05
}
fn default_mass() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_horizon() -> f64 {
    12.0
}
fn default_snapshot_stride() -> usize {
    80
}
fn default_trials() -> usize {
    40
}

/// Flock predator as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredatorNdConfig {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub rho_p: f64,
    pub s: f64,
}

impl Default for PredatorNdConfig {
    /// The bundled flock experiment's predator: approaching the box diagonal
    /// from the lower left at constant speed.
    fn default() -> Self {
        Self {
            position: [-30.0, -30.0, 0.0],
            velocity: [10.0, 10.0, 0.0],
            rho_p: 30.0,
            s: 10.0,
        }
    }
}

impl PredatorNdConfig {
    pub fn to_model(&self) -> PredatorND {
        PredatorND {
            position: Vector3::from(self.position),
            velocity: Vector3::from(self.velocity),
            rho_p: self.rho_p,
            s: self.s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulate1dConfig {
    pub agents: usize,
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub predator: Option<Predator1D>,
    #[serde(default = "default_eps_ss")]
    pub eps_ss: f64,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFlockConfig {
    pub agents: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_box_side")]
    pub box_side: f64,
    #[serde(default = "default_v0")]
    pub v0: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_true")]
    pub renormalize_speed: bool,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_snapshot_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub predator: Option<PredatorNdConfig>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOneDConfig {
    pub agents: usize,
    pub predator: Predator1D,
    #[serde(default = "default_eps_ss")]
    pub eps_ss: f64,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFlockConfig {
    pub agents: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_box_side")]
    pub box_side: f64,
    #[serde(default = "default_v0")]
    pub v0: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_true")]
    pub renormalize_speed: bool,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub predator: Option<PredatorNdConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SweepModelConfig {
    #[serde(rename = "one-d")]
    OneD(SweepOneDConfig),
    #[serde(rename = "flock")]
    Flock(SweepFlockConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub model: SweepModelConfig,
    #[serde(default)]
    pub rho_grid: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

/// Full description of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum RunConfig {
    #[serde(rename = "simulate-1d")]
    Simulate1d(Simulate1dConfig),
    #[serde(rename = "simulate-flock")]
    SimulateFlock(SimulateFlockConfig),
    #[serde(rename = "sweep")]
    Sweep(SweepFileConfig),
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fills the optional fields with their documented defaults so that the
    /// embedded provenance is explicit.
    pub fn resolve(&mut self) {
        match self {
            RunConfig::Simulate1d(_) => {}
            RunConfig::SimulateFlock(cfg) => {
                cfg.predator.get_or_insert_with(PredatorNdConfig::default);
            }
            RunConfig::Sweep(cfg) => {
                let (default_grid, default_objective) = match &cfg.model {
                    SweepModelConfig::OneD(_) => (default_grid_1d(), Objective::SteadyStateEscape),
                    SweepModelConfig::Flock(_) => {
                        (default_grid_flock(), Objective::MinAvgDistance)
                    }
                };
                cfg.rho_grid.get_or_insert(default_grid);
                cfg.objective.get_or_insert(default_objective);
                if let SweepModelConfig::Flock(flock) = &mut cfg.model {
                    flock.predator.get_or_insert_with(PredatorNdConfig::default);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        let check_agents = |n: usize| {
            if n < 1 {
                err("agents must be >= 1".into())
            } else {
                Ok(())
            }
        };
        let check_rho = |rho: f64| {
            if !rho.is_finite() || rho < 0.0 {
                err(format!("rho must be finite and >= 0, got {rho}"))
            } else {
                Ok(())
            }
        };
        let check_predator_1d = |p: &Predator1D| {
            if !p.x_p.is_finite() {
                return err(format!("x_p must be finite, got {}", p.x_p));
            }
            if !p.rho_p.is_finite() || p.rho_p < 0.0 {
                return err(format!("rho_p must be finite and >= 0, got {}", p.rho_p));
            }
            if !p.s.is_finite() || p.s <= 0.0 {
                return err(format!("s must be finite and > 0, got {}", p.s));
            }
            Ok(())
        };
        let check_flock_common =
            |dim: usize, box_side: f64, v0: f64, dt: f64, mass: f64, horizon: f64| {
                if !(2..=3).contains(&dim) {
                    return err(format!("dim must be 2 or 3, got {dim}"));
                }
                if !box_side.is_finite() || box_side <= 0.0 {
                    return err(format!("box_side must be finite and > 0, got {box_side}"));
                }
                if !v0.is_finite() || v0 <= 0.0 {
                    return err(format!("v0 must be finite and > 0, got {v0}"));
                }
                if !dt.is_finite() || dt <= 0.0 {
                    return err(format!("dt must be finite and > 0, got {dt}"));
                }
                if !mass.is_finite() || mass <= 0.0 {
                    return err(format!("mass must be finite and > 0, got {mass}"));
                }
                if !horizon.is_finite() || horizon < dt {
                    return err(format!(
                        "horizon ({horizon}) must be finite and at least dt ({dt})"
                    ));
                }
                Ok(())
            };
        let check_predator_nd = |p: &PredatorNdConfig| {
            if !p
                .position
                .iter()
                .chain(p.velocity.iter())
                .all(|c| c.is_finite())
            {
                return err("predator position and velocity must be finite".into());
            }
            if !p.rho_p.is_finite() || p.rho_p < 0.0 {
                return err(format!("rho_p must be finite and >= 0, got {}", p.rho_p));
            }
            if !p.s.is_finite() || p.s <= 0.0 {
                return err(format!("s must be finite and > 0, got {}", p.s));
            }
            Ok(())
        };

        match self {
            RunConfig::Simulate1d(cfg) => {
                check_agents(cfg.agents)?;
                check_rho(cfg.rho)?;
                if !(cfg.eps_ss > 0.0) {
                    return err(format!("eps_ss must be > 0, got {}", cfg.eps_ss));
                }
                if cfg.t_max < 1 {
                    return err("t_max must be >= 1".into());
                }
                if let Some(p) = &cfg.predator {
                    check_predator_1d(p)?;
                }
                Ok(())
            }
            RunConfig::SimulateFlock(cfg) => {
                check_agents(cfg.agents)?;
                check_rho(cfg.rho)?;
                check_flock_common(cfg.dim, cfg.box_side, cfg.v0, cfg.dt, cfg.mass, cfg.horizon)?;
                if cfg.snapshot_stride < 1 {
                    return err("snapshot_stride must be >= 1".into());
                }
                match &cfg.predator {
                    Some(p) => check_predator_nd(p),
                    None => err("flock simulation requires a predator".into()),
                }
            }
            RunConfig::Sweep(cfg) => {
                if cfg.trials < 1 {
                    return err("trials must be >= 1".into());
                }
                let grid = cfg
                    .rho_grid
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("rho_grid is unresolved".into()))?;
                if grid.is_empty() {
                    return err("rho_grid must be non-empty".into());
                }
                if !grid.iter().all(|r| r.is_finite() && *r >= 0.0) {
                    return err("rho_grid values must be finite and >= 0".into());
                }
                if !grid.windows(2).all(|w| w[0] < w[1]) {
                    return err("rho_grid must be strictly ascending".into());
                }
                let objective = cfg
                    .objective
                    .ok_or_else(|| ConfigError::Invalid("objective is unresolved".into()))?;
                match &cfg.model {
                    SweepModelConfig::OneD(model) => {
                        check_agents(model.agents)?;
                        check_predator_1d(&model.predator)?;
                        if !(model.eps_ss > 0.0) {
                            return err(format!("eps_ss must be > 0, got {}", model.eps_ss));
                        }
                        if model.t_max < 1 {
                            return err("t_max must be >= 1".into());
                        }
                        if objective != Objective::SteadyStateEscape {
                            return err(
                                "the one-d model supports only the steady-state-escape objective"
                                    .into(),
                            );
                        }
                    }
                    SweepModelConfig::Flock(model) => {
                        check_agents(model.agents)?;
                        check_flock_common(
                            model.dim,
                            model.box_side,
                            model.v0,
                            model.dt,
                            model.mass,
                            model.horizon,
                        )?;
                        match &model.predator {
                            Some(p) => check_predator_nd(p)?,
                            None => return err("flock sweep requires a predator".into()),
                        }
                        if objective == Objective::SteadyStateEscape {
                            return err(
                                "the steady-state-escape objective requires the one-d model"
                                    .into(),
                            );
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn out_dir(&self) -> Option<&Path> {
        match self {
            RunConfig::Simulate1d(cfg) => cfg.out_dir.as_deref(),
            RunConfig::SimulateFlock(cfg) => cfg.out_dir.as_deref(),
            RunConfig::Sweep(cfg) => cfg.out_dir.as_deref(),
        }
    }
}

impl Simulate1dConfig {
    pub fn to_params(&self) -> Sim1DParams {
        Sim1DParams {
            rho: self.rho,
            predator: self.predator,
            eps_ss: self.eps_ss,
            t_max: self.t_max,
        }
    }
}

impl SimulateFlockConfig {
    /// Config with the documented defaults for everything but the required
    /// fields.
    pub fn with_required(agents: usize, rho: f64) -> Self {
        Self {
            agents,
            dim: default_dim(),
            rho,
            seed: 0,
            box_side: default_box_side(),
            v0: default_v0(),
            dt: default_dt(),
            mass: default_mass(),
            renormalize_speed: true,
            horizon: default_horizon(),
            snapshot_stride: default_snapshot_stride(),
            predator: Some(PredatorNdConfig::default()),
            out_dir: None,
        }
    }

    pub fn to_params(&self) -> FlockParams {
        FlockParams {
            rho: self.rho,
            v0: self.v0,
            dt: self.dt,
            masses: vec![self.mass; self.agents],
            renormalize_speed: self.renormalize_speed,
        }
    }

    pub fn predator_model(&self) -> PredatorND {
        self.predator
            .as_ref()
            .expect("resolved config has a predator")
            .to_model()
    }
}

impl SweepFlockConfig {
    /// Config with the documented defaults for everything but the agent count.
    pub fn with_required(agents: usize) -> Self {
        Self {
            agents,
            dim: default_dim(),
            box_side: default_box_side(),
            v0: default_v0(),
            dt: default_dt(),
            mass: default_mass(),
            renormalize_speed: true,
            horizon: default_horizon(),
            predator: Some(PredatorNdConfig::default()),
        }
    }
}

impl SweepFileConfig {
    /// Converts a resolved, validated file config into the sweep inputs.
    pub fn to_sweep_config(&self) -> SweepConfig {
        let model = match &self.model {
            SweepModelConfig::OneD(m) => SweepModel::OneD {
                agents: m.agents,
                predator: m.predator,
                eps_ss: m.eps_ss,
                t_max: m.t_max,
            },
            SweepModelConfig::Flock(m) => SweepModel::Flock {
                agents: m.agents,
                dim: m.dim,
                box_side: m.box_side,
                v0: m.v0,
                dt: m.dt,
                mass: m.mass,
                renormalize_speed: m.renormalize_speed,
                horizon: m.horizon,
                predator: m
                    .predator
                    .as_ref()
                    .expect("resolved config has a predator")
                    .to_model(),
            },
        };
        SweepConfig {
            model,
            rho_grid: self.rho_grid.clone().expect("resolved grid"),
            trials: self.trials,
            base_seed: self.base_seed,
            objective: self.objective.expect("resolved objective"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus1d::ForceLaw;

    fn sweep_1d_json() -> &'static str {
        r#"{
            "mode": "sweep",
            "trials": 40,
            "base_seed": 1,
            "model": {
                "kind": "one-d",
                "agents": 100,
                "predator": {"x_p": 0.6, "rho_p": 0.2, "s": 2.0, "force_law": "linear"}
            }
        }"#
    }

    #[test]
    fn sweep_config_parses_resolves_and_validates() {
        let mut config: RunConfig = serde_json::from_str(sweep_1d_json()).unwrap();
        config.resolve();
        config.validate().unwrap();
        let RunConfig::Sweep(sweep) = &config else {
            panic!("expected sweep config")
        };
        assert_eq!(sweep.objective, Some(Objective::SteadyStateEscape));
        assert_eq!(sweep.rho_grid.as_ref().unwrap().len(), 21);
        let lib = sweep.to_sweep_config();
        assert_eq!(lib.trials, 40);
        match lib.model {
            SweepModel::OneD { agents, predator, .. } => {
                assert_eq!(agents, 100);
                assert_eq!(predator.force_law, ForceLaw::Linear);
            }
            _ => panic!("expected one-d model"),
        }
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        let text = r#"{"mode": "simulate-1d", "agents": 3, "rho": 0.1, "bogus": 1}"#;
        let parsed: Result<RunConfig, _> = serde_json::from_str(text);
        let message = parsed.unwrap_err().to_string();
        assert!(message.contains("bogus"), "unhelpful error: {message}");
    }

    #[test]
    fn zero_dt_names_the_violated_invariant() {
        let text = r#"{
            "mode": "simulate-flock",
            "agents": 5,
            "rho": 10.0,
            "dt": 0.0,
            "predator": {"position": [-30,-30,0], "velocity": [10,10,0], "rho_p": 30, "s": 10}
        }"#;
        let mut config: RunConfig = serde_json::from_str(text).unwrap();
        config.resolve();
        let message = config.validate().unwrap_err().to_string();
        assert!(message.contains("dt"), "message must name dt: {message}");
        assert!(message.contains("> 0"), "message must state dt > 0: {message}");
    }

    #[test]
    fn objective_compatibility_is_enforced() {
        let mut config: RunConfig = serde_json::from_str(sweep_1d_json()).unwrap();
        config.resolve();
        if let RunConfig::Sweep(sweep) = &mut config {
            sweep.objective = Some(Objective::MinAvgDistance);
        }
        assert!(config.validate().is_err());
    }

    #[test]
    fn out_dir_is_read_but_never_written() {
        let text = r#"{"mode": "simulate-1d", "agents": 3, "rho": 0.1, "out_dir": "/tmp/x"}"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.out_dir(), Some(Path::new("/tmp/x")));
        let round_trip = serde_json::to_string(&config).unwrap();
        assert!(!round_trip.contains("out_dir"));
    }

    #[test]
    fn resolved_flock_config_round_trips() {
        let text = r#"{"mode": "simulate-flock", "agents": 4, "rho": 10.0, "seed": 9}"#;
        let mut config: RunConfig = serde_json::from_str(text).unwrap();
        config.resolve();
        config.validate().unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(config, back);
        let RunConfig::SimulateFlock(flock) = &back else {
            panic!()
        };
        assert_eq!(flock.dt, 0.05);
        assert_eq!(flock.predator.as_ref().unwrap().rho_p, 30.0);
    }

    #[test]
    fn missing_flock_predator_in_sweep_is_reported() {
        let text = r#"{
            "mode": "sweep",
            "model": {"kind": "flock", "agents": 10}
        }"#;
        let mut config: RunConfig = serde_json::from_str(text).unwrap();
        // resolve() injects the default predator, so strip it again to check
        // the validation path for hand-built configs
        config.resolve();
        if let RunConfig::Sweep(sweep) = &mut config {
            if let SweepModelConfig::Flock(flock) = &mut sweep.model {
                flock.predator = None;
            }
        }
        let message = config.validate().unwrap_err().to_string();
        assert!(message.contains("predator"));
    }
}
