//! Everything a run needs: map, agents, roles, hyperparameters and modes.

use serde::{Deserialize, Serialize};

use crate::envmap::{OccupancyGrid, RobotType};
use crate::gp::PlanSettings;
use crate::role_playing::{RolePlaySettings, Schedule, SharingMode};
use crate::{Error, Point2, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AgentSpec {
    pub agent_id: usize,
    pub robot: RobotType,
    pub start: Point2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoleSpec {
    pub role_id: usize,
    pub destination: Point2,
    /// Only this agent may take the role.
    pub reserved_for: Option<usize>,
}

/// How initial trajectories are seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Shortest E-Map route, shortcut by line of sight.
    Emap,
    /// Straight segment from source to destination.
    Straight,
}

/// How agents are matched to roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    /// Hungarian matching on the qualification matrix.
    Gra,
    /// Greedy closest source-destination pairs.
    Nn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub init: InitMode,
    pub assign: AssignMode,
    pub sharing: SharingMode,
    pub schedule: Schedule,
}

impl Default for Modes {
    fn default() -> Self {
        Self {
            init: InitMode::Emap,
            assign: AssignMode::Gra,
            sharing: SharingMode::ConflictField,
            schedule: Schedule::RoundRobin,
        }
    }
}

/// Axis-aligned box edit (by cell centers).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectEdit {
    pub min: [f64; 2],
    pub max: [f64; 2],
    #[serde(default = "yes")]
    pub occupied: bool,
}

fn yes() -> bool {
    true
}

/// Map change injected at a simulation step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapEvent {
    pub step: usize,
    pub rects: Vec<RectEdit>,
}

impl MapEvent {
    pub fn apply(&self, grid: &mut OccupancyGrid) {
        for r in &self.rects {
            grid.fill_rect(Point2::new(r.min[0], r.min[1]), Point2::new(r.max[0], r.max[1]), r.occupied);
        }
    }
}

/// Replanning triggers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Replan when a role's remaining `F_conf` exceeds this multiple of its
    /// value at publish time...
    pub conf_ratio: f64,
    /// ...and this absolute floor.
    pub conf_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { conf_ratio: 10.0, conf_floor: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub grid: OccupancyGrid,
    pub agents: Vec<AgentSpec>,
    pub roles: Vec<RoleSpec>,
    pub plan: PlanSettings,
    pub role_play: RolePlaySettings,
    pub modes: Modes,
    pub thresholds: Thresholds,
    pub map_events: Vec<MapEvent>,
    /// Extra simulation steps allowed beyond the plan length (for replans).
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.agents.len() < self.roles.len() {
            return Err(Error::input(format!(
                "{} agents cannot cover {} roles",
                self.agents.len(),
                self.roles.len()
            )));
        }
        if self.roles.is_empty() {
            return Err(Error::input("scenario has no roles"));
        }
        let (w, h) = self.grid.extent();
        let inside = |p: &Point2| p.x >= 0.0 && p.y >= 0.0 && p.x < w && p.y < h;
        let mut ids = std::collections::HashSet::new();
        for a in &self.agents {
            a.robot.validate()?;
            if !ids.insert(a.agent_id) {
                return Err(Error::input(format!("duplicate agent id {}", a.agent_id)));
            }
            if !inside(&a.start) {
                return Err(Error::input(format!("agent {} starts outside the map", a.agent_id)));
            }
        }
        let mut rids = std::collections::HashSet::new();
        for r in &self.roles {
            if !rids.insert(r.role_id) {
                return Err(Error::input(format!("duplicate role id {}", r.role_id)));
            }
            if let Some(id) = r.reserved_for {
                if !ids.contains(&id) {
                    return Err(Error::input(format!("role {} is reserved for unknown agent {id}", r.role_id)));
                }
            }
            if !inside(&r.destination) {
                return Err(Error::input(format!("role {} lies outside the map", r.role_id)));
            }
        }
        // one parameter set per robot type
        for a in &self.agents {
            for b in &self.agents {
                if a.robot.type_id == b.robot.type_id && a.robot != b.robot {
                    return Err(Error::input(format!("robot type '{}' has conflicting parameters", a.robot.type_id)));
                }
            }
        }
        self.plan.validate()
    }

    pub fn agent_ids(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.agent_id).collect()
    }

    pub fn role_ids(&self) -> Vec<usize> {
        self.roles.iter().map(|r| r.role_id).collect()
    }
}
