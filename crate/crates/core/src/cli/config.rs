//! TOML scenario and suite files.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bundled;
use crate::engine::{
    AgentSpec, AssignMode, InitMode, MapEvent, Modes, RoleSpec, Scenario, Thresholds,
};
use crate::envmap::{load_grid, GrayImage, OccupancyGrid, RobotType};
use crate::gp::{PlanSettings, SolverParams};
use crate::role_playing::{RolePlaySettings, Schedule, SharingMode};
use crate::{Error, Point2, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    /// Name of a built-in map.
    pub bundled: Option<String>,
    /// Binary PGM path, relative to the scenario file.
    pub pgm: Option<PathBuf>,
    pub resolution: Option<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: u8,
}

fn default_threshold() -> u8 {
    128
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub qc: Option<f64>,
    pub lambda: Option<f64>,
    pub steps: Option<usize>,
    pub total_time: Option<f64>,
    pub sigma_fix: Option<f64>,
    pub sigma_vel: Option<f64>,
    pub max_iterations: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolePlayFile {
    pub horizon: Option<usize>,
    pub noise_std: Option<f64>,
    pub replan_every_step: Option<bool>,
    pub distress_after: Option<usize>,
    pub max_iterations: Option<usize>,
    pub sigma_pair: Option<f64>,
    pub yield_to_priority: Option<bool>,
    pub max_extra_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesFile {
    pub init: Option<InitMode>,
    pub assign: Option<AssignMode>,
    pub sharing: Option<SharingMode>,
    pub schedule: Option<Schedule>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotTypeFile {
    pub id: String,
    pub radius: f64,
    pub v_max: f64,
    pub sigma_obs: f64,
    pub epsilon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub id: usize,
    #[serde(rename = "type")]
    pub type_id: String,
    pub start: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleFile {
    pub id: usize,
    pub destination: [f64; 2],
    pub reserved_for: Option<usize>,
}

/// On-disk scenario. See `docs/scenario-format.md`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub map: MapFile,
    #[serde(default)]
    pub plan: PlanFile,
    #[serde(default)]
    pub role_play: RolePlayFile,
    #[serde(default)]
    pub modes: ModesFile,
    pub thresholds: Option<Thresholds>,
    pub robot_types: Vec<RobotTypeFile>,
    pub agents: Vec<AgentFile>,
    pub roles: Vec<RoleFile>,
    #[serde(default)]
    pub map_events: Vec<MapEvent>,
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), message: message.into() }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path, e.to_string()))?;
    toml::from_str(&text).map_err(|e| parse_error(path, e.to_string()))
}

fn load_map(map: &MapFile, base: &Path, path: &Path) -> Result<OccupancyGrid> {
    match (&map.bundled, &map.pgm) {
        (Some(name), None) => {
            let grid = bundled::map(name).map_err(|e| parse_error(path, e.to_string()))?;
            match map.resolution {
                Some(r) if r != grid.resolution() => {
                    Err(parse_error(path, "bundled maps have a fixed resolution of 0.05 m"))
                }
                _ => Ok(grid),
            }
        }
        (None, Some(pgm)) => {
            let file = base.join(pgm);
            let bytes = std::fs::read(&file).map_err(|e| parse_error(path, format!("{}: {e}", file.display())))?;
            let image = GrayImage::from_pgm(&bytes).map_err(|e| parse_error(&file, e.to_string()))?;
            let res = map.resolution.ok_or_else(|| parse_error(path, "map.resolution is required for PGM maps"))?;
            load_grid(&image, map.threshold, res).map_err(|e| parse_error(path, e.to_string()))
        }
        _ => Err(parse_error(path, "map needs exactly one of `bundled` or `pgm`")),
    }
}

impl ScenarioFile {
    pub fn into_scenario(self, base: &Path, path: &Path) -> Result<Scenario> {
        let grid = load_map(&self.map, base, path)?;
        let mut plan = PlanSettings::default();
        let p = &self.plan;
        plan.qc = p.qc.unwrap_or(plan.qc);
        plan.lambda = p.lambda.unwrap_or(plan.lambda);
        plan.steps = p.steps.unwrap_or(plan.steps);
        plan.total_time = p.total_time.unwrap_or(plan.total_time);
        plan.sigma_fix = p.sigma_fix.unwrap_or(plan.sigma_fix);
        plan.sigma_vel = p.sigma_vel.unwrap_or(plan.sigma_vel);
        plan.solver = SolverParams {
            max_iterations: p.max_iterations.unwrap_or(plan.solver.max_iterations),
            rel_tol: p.rel_tol.unwrap_or(plan.solver.rel_tol),
            ..plan.solver
        };

        let defaults = Modes::default();
        let modes = Modes {
            init: self.modes.init.unwrap_or(defaults.init),
            assign: self.modes.assign.unwrap_or(defaults.assign),
            sharing: self.modes.sharing.unwrap_or(defaults.sharing),
            schedule: self.modes.schedule.unwrap_or(defaults.schedule),
        };

        let mut role_play = RolePlaySettings { mode: modes.sharing, seed: self.seed, ..RolePlaySettings::default() };
        let rp = &self.role_play;
        role_play.horizon = rp.horizon.or(role_play.horizon);
        role_play.noise_std = rp.noise_std.unwrap_or(role_play.noise_std);
        role_play.replan_every_step = rp.replan_every_step.unwrap_or(role_play.replan_every_step);
        role_play.distress_after = rp.distress_after.unwrap_or(role_play.distress_after);
        role_play.sigma_pair = rp.sigma_pair.unwrap_or(role_play.sigma_pair);
        role_play.yield_to_priority = rp.yield_to_priority.unwrap_or(role_play.yield_to_priority);
        if let Some(it) = rp.max_iterations {
            role_play.solver.max_iterations = it;
        }

        let mut agents = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let t = self
                .robot_types
                .iter()
                .find(|t| t.id == a.type_id)
                .ok_or_else(|| parse_error(path, format!("agent {} uses unknown robot type '{}'", a.id, a.type_id)))?;
            agents.push(AgentSpec {
                agent_id: a.id,
                robot: RobotType {
                    type_id: t.id.clone(),
                    radius: t.radius,
                    v_max: t.v_max,
                    sigma_obs: t.sigma_obs,
                    epsilon_safe: t.epsilon,
                },
                start: Point2::new(a.start[0], a.start[1]),
            });
        }
        let roles = self
            .roles
            .iter()
            .map(|r| RoleSpec {
                role_id: r.id,
                destination: Point2::new(r.destination[0], r.destination[1]),
                reserved_for: r.reserved_for,
            })
            .collect();

        let scenario = Scenario {
            name: self.name,
            grid,
            agents,
            roles,
            plan,
            role_play,
            modes,
            thresholds: self.thresholds.unwrap_or_default(),
            map_events: self.map_events,
            max_steps: rp.max_extra_steps,
            seed: self.seed,
        };
        scenario.validate().map_err(|e| parse_error(path, e.to_string()))?;
        Ok(scenario)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let file: ScenarioFile = read_toml(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.into_scenario(base, path)
}

/// Parses scenario text; PGM paths resolve against `base`.
pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario> {
    let path = Path::new("<inline>");
    let file: ScenarioFile = toml::from_str(text).map_err(|e| parse_error(path, e.to_string()))?;
    file.into_scenario(base, path)
}

/// What a bench cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Negotiation, qualification and assignment.
    #[default]
    Plan,
    /// The full pipeline including role-playing.
    Simulate,
}

/// One column of the mode matrix; unset fields keep the scenario's value.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCell {
    pub label: String,
    pub init: Option<InitMode>,
    pub assign: Option<AssignMode>,
    pub sharing: Option<SharingMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub name: String,
    #[serde(default)]
    pub stage: Stage,
    /// Scenario files relative to the suite file.
    pub scenarios: Vec<PathBuf>,
    pub modes: Vec<ModeCell>,
    /// Optional sweep applied to every robot type.
    #[serde(default)]
    pub sigma_obs: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct Suite {
    pub name: String,
    pub stage: Stage,
    pub scenarios: Vec<Scenario>,
    pub modes: Vec<ModeCell>,
    pub sigma_obs: Vec<f64>,
    pub seed: Option<u64>,
}

pub fn load_suite(path: &Path) -> Result<Suite> {
    let file: SuiteFile = read_toml(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if file.modes.is_empty() || file.scenarios.is_empty() {
        return Err(parse_error(path, "suite needs at least one scenario and one mode"));
    }
    let scenarios = file.scenarios.iter().map(|s| load_scenario(&base.join(s))).collect::<Result<Vec<_>>>()?;
    Ok(Suite {
        name: file.name,
        stage: file.stage,
        scenarios,
        modes: file.modes,
        sigma_obs: file.sigma_obs,
        seed: file.seed,
    })
}

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub init: Option<InitMode>,
    pub assign: Option<AssignMode>,
    pub sharing: Option<SharingMode>,
    pub sigma_obs: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(seed) = self.seed {
            scenario.seed = seed;
            scenario.role_play.seed = seed;
        }
        if let Some(m) = self.init {
            scenario.modes.init = m;
        }
        if let Some(m) = self.assign {
            scenario.modes.assign = m;
        }
        if let Some(m) = self.sharing {
            scenario.modes.sharing = m;
            scenario.role_play.mode = m;
        }
        if let Some(s) = self.sigma_obs {
            for a in &mut scenario.agents {
                a.robot.sigma_obs = s;
            }
        }
        scenario.validate()
    }
}
