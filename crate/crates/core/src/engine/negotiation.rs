//! Per-type environments, initial paths and the feasibility gate.

use std::sync::Arc;

use rayon::prelude::*;

use super::scenario::{InitMode, Scenario};
use crate::envmap::{
    compute_sdf, destair, extract_feature_nodes, feasible_map, find_aux_nodes, make_init_path, reduce_nodes,
    skeletonize, EMapGraph, InitialPath, OccupancyGrid, RobotType, SignedDistanceField,
};
use crate::{Point2, Result};

/// Environment of one robot type.
#[derive(Clone, Debug)]
pub struct TypeEnv {
    pub robot: RobotType,
    /// Inflated map: cells a robot center may occupy are free.
    pub feasible: OccupancyGrid,
    pub emap: EMapGraph,
}

#[derive(Clone, Debug)]
pub struct NegotiationResult {
    /// Every role has an initial path from at least one agent.
    pub feasible: bool,
    /// Distance field of the raw map; robot radii are subtracted per factor.
    pub sdf: Arc<SignedDistanceField>,
    pub types: Vec<TypeEnv>,
    /// Index into `types` per agent.
    pub agent_type: Vec<usize>,
    /// `init_paths[agent][role]`.
    pub init_paths: Vec<Vec<Option<InitialPath>>>,
    /// Ids of roles no agent can reach.
    pub uncoverable: Vec<usize>,
}

impl NegotiationResult {
    pub fn env_of(&self, agent: usize) -> &TypeEnv {
        &self.types[self.agent_type[agent]]
    }
}

pub fn build_type_env(grid: &OccupancyGrid, robot: &RobotType) -> TypeEnv {
    let feasible = feasible_map(grid, robot);
    let skeleton = destair(&skeletonize(&feasible));
    TypeEnv { robot: robot.clone(), emap: extract_feature_nodes(&skeleton), feasible }
}

/// Waypoints from `source` to `dest` for one robot type, or `None` if the
/// type cannot make the trip.
pub fn initial_waypoints(env: &TypeEnv, mode: InitMode, source: Point2, dest: Point2) -> Option<Vec<Point2>> {
    let blocked = |p: &Point2| env.feasible.is_occupied_point(p);
    if blocked(&source) || blocked(&dest) {
        return None;
    }
    match mode {
        InitMode::Straight => Some(vec![source, dest]),
        InitMode::Emap => {
            let route = find_aux_nodes(&env.emap, &env.feasible, source, dest)?;
            let n = route.cells.len();
            let dense: Vec<Point2> = route
                .cells
                .iter()
                .skip(1)
                .take(n.saturating_sub(2))
                .map(|&(c, r)| env.feasible.cell_center(c, r))
                .collect();
            Some(reduce_nodes(&dense, &env.feasible, source, dest))
        }
    }
}

/// Builds every type's environment and the initial path of every
/// (agent, role) pair.
pub fn role_negotiation(scenario: &Scenario) -> Result<NegotiationResult> {
    scenario.validate()?;
    let mut type_robots: Vec<RobotType> = Vec::new();
    let mut agent_type = Vec::with_capacity(scenario.agents.len());
    for a in &scenario.agents {
        let t = match type_robots.iter().position(|r| r.type_id == a.robot.type_id) {
            Some(t) => t,
            None => {
                type_robots.push(a.robot.clone());
                type_robots.len() - 1
            }
        };
        agent_type.push(t);
    }
    let types: Vec<TypeEnv> = type_robots.par_iter().map(|r| build_type_env(&scenario.grid, r)).collect();
    let sdf = Arc::new(compute_sdf(&scenario.grid));

    let (m, n) = (scenario.agents.len(), scenario.roles.len());
    let plan = &scenario.plan;
    let paths: Vec<Result<Option<InitialPath>>> = (0..m * n)
        .into_par_iter()
        .map(|idx| {
            let (a, r) = (idx / n, idx % n);
            let agent = &scenario.agents[a];
            let role = &scenario.roles[r];
            if role.reserved_for.is_some_and(|id| id != agent.agent_id) {
                return Ok(None);
            }
            let Some(waypoints) =
                initial_waypoints(&types[agent_type[a]], scenario.modes.init, agent.start, role.destination)
            else {
                return Ok(None);
            };
            let states = make_init_path(&waypoints, plan.steps, plan.total_time)?;
            Ok(Some(InitialPath { agent_id: agent.agent_id, role_id: role.role_id, waypoints, states }))
        })
        .collect();
    let mut init_paths = vec![vec![None; n]; m];
    for (idx, p) in paths.into_iter().enumerate() {
        init_paths[idx / n][idx % n] = p?;
    }
    let uncoverable: Vec<usize> =
        (0..n).filter(|&r| (0..m).all(|a| init_paths[a][r].is_none())).map(|r| scenario.roles[r].role_id).collect();
    Ok(NegotiationResult { feasible: uncoverable.is_empty(), sdf, types, agent_type, init_paths, uncoverable })
}

/// `true` if no support state, nor any point sampled between consecutive
/// states at half-cell spacing, has its center on an occupied cell.
pub fn trajectory_clear(states: &[crate::State], feasible: &OccupancyGrid) -> bool {
    let step = feasible.resolution() * 0.5;
    states.windows(2).all(|w| {
        let a = Point2::new(w[0][0], w[0][1]);
        let b = Point2::new(w[1][0], w[1][1]);
        let samples = ((b - a).norm() / step).ceil().max(1.0) as usize;
        (0..=samples).all(|i| !feasible.is_occupied_point(&(a + (b - a) * (i as f64 / samples as f64))))
    })
}
