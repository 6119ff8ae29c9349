//! Central loop: negotiate, qualify, assign, launch, monitor, replan.

use std::sync::Arc;

use serde::Serialize;

use super::negotiation::{role_negotiation, trajectory_clear, NegotiationResult};
use super::scenario::{AssignMode, Scenario, Thresholds};
use crate::assignment::{evaluate_qualifications, gra_solve, nn_assign, Assignment, QualificationMatrix};
use crate::envmap::{compute_sdf, RobotType, SignedDistanceField};
use crate::gp::{conf_cost, DistanceField, ProcessRole};
use crate::role_playing::{metrics, run_simulation, AgentRuntime, Control, Metrics, SharedChannel, SimulationTrace, Snapshot};
use crate::{Error, Point2, Result, State};

/// Role id carried by agents left without a role.
pub const IDLE_ROLE: usize = usize::MAX;

/// Result of negotiation, qualification and assignment.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub negotiation: NegotiationResult,
    pub q: QualificationMatrix,
    /// Pairs are (agent index, role index).
    pub assignment: Assignment,
    /// One role per agent, in agent order; unassigned agents hold still.
    pub roles: Vec<ProcessRole>,
    /// Whether each assigned trajectory stays clear of its type's inflated map.
    pub clear: Vec<bool>,
    /// LM iterations of each assigned pair's qualification solve.
    pub iterations: Vec<usize>,
}

impl PlanOutcome {
    pub fn all_clear(&self) -> bool {
        self.clear.iter().all(|&c| c)
    }

    pub fn iterations_mean(&self) -> f64 {
        if self.iterations.is_empty() {
            0.0
        } else {
            self.iterations.iter().sum::<usize>() as f64 / self.iterations.len() as f64
        }
    }
}

/// Negotiation, qualification matrix and assignment for `scenario`.
pub fn plan_roles(scenario: &Scenario) -> Result<PlanOutcome> {
    let negotiation = role_negotiation(scenario)?;
    if !negotiation.feasible {
        let roles: Vec<String> = negotiation.uncoverable.iter().map(|r| r.to_string()).collect();
        return Err(Error::Infeasible(format!("no initial path reaches role(s) {}", roles.join(", "))));
    }
    let robots: Vec<RobotType> = scenario.agents.iter().map(|a| a.robot.clone()).collect();
    let fields: Vec<&(dyn DistanceField + Sync)> =
        scenario.agents.iter().map(|_| &*negotiation.sdf as &(dyn DistanceField + Sync)).collect();
    let q = evaluate_qualifications(&robots, &fields, &negotiation.init_paths, &scenario.plan)?;
    let assignment = match scenario.modes.assign {
        AssignMode::Gra => gra_solve(&q)?,
        AssignMode::Nn => {
            let sources: Vec<Point2> = scenario.agents.iter().map(|a| a.start).collect();
            let dests: Vec<Point2> = scenario.roles.iter().map(|r| r.destination).collect();
            let mut nn = nn_assign(&sources, &dests)?;
            nn.total_cost = nn.cost_under(&q);
            if !nn.total_cost.is_finite() {
                return Err(Error::Infeasible("nearest-neighbour matching uses an infeasible pair".into()));
            }
            nn
        }
    };
    let dt = scenario.plan.dt();
    let mut roles = Vec::with_capacity(scenario.agents.len());
    let mut clear = Vec::new();
    let mut iterations = Vec::new();
    for (a, agent) in scenario.agents.iter().enumerate() {
        match assignment.role_of(a) {
            Some(r) => {
                let role = q.role(a, r).cloned().ok_or_else(|| Error::Infeasible(format!("agent {a} role {r}")))?;
                clear.push(trajectory_clear(&role.states, &negotiation.env_of(a).feasible));
                iterations.push(q.iterations[a * q.n + r].unwrap_or(0));
                roles.push(role);
            }
            None => {
                let still = State::new(agent.start.x, agent.start.y, 0.0, 0.0);
                let mut role = ProcessRole::new(agent.agent_id, IDLE_ROLE, vec![still; scenario.plan.steps + 1], dt)?;
                role.cost = 0.0;
                roles.push(role);
            }
        }
    }
    Ok(PlanOutcome { negotiation, q, assignment, roles, clear, iterations })
}

/// Outcome of the problem detector.
#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    None,
    Replan(String),
}

/// What the monitor remembers between steps.
#[derive(Clone, Debug)]
pub struct MonitorState {
    pub map_version: u64,
    pub sdf: Arc<SignedDistanceField>,
    /// Per agent: channel version of the last role seen and its remaining
    /// `F_conf` at that moment.
    pub baseline: Vec<Option<(u64, f64)>>,
}

/// Remaining `F_conf` of `role` from global step `step` on.
fn remaining_conf(role: &ProcessRole, step: usize, field: &SignedDistanceField, robot: &RobotType) -> f64 {
    let local = step.saturating_sub(role.start_step).min(role.steps());
    conf_cost(&role.states[local..], role.dt, step, field, robot.radius, robot.epsilon_safe)
}

/// Flags a replan on distress, on a map change, or when a published role's
/// remaining obstacle cost grows past the threshold relative to its value
/// when it was published. Newly seen publications only record a baseline.
pub fn detect_problem(
    snapshot: &Snapshot,
    agents: &[AgentRuntime],
    monitor: &mut MonitorState,
    thresholds: &Thresholds,
    step: usize,
) -> Decision {
    if let Some(a) = agents.iter().find(|a| a.distressed) {
        return Decision::Replan(format!("agent {} reported distress", a.agent_id));
    }
    if snapshot.map.version != monitor.map_version {
        return Decision::Replan(format!("map changed to version {}", snapshot.map.version));
    }
    for (i, a) in agents.iter().enumerate() {
        let Some(p) = snapshot.get(a.agent_id) else { continue };
        let c = remaining_conf(&p.role, step, &monitor.sdf, &a.robot);
        match monitor.baseline[i] {
            Some((version, base)) if version == p.version => {
                let limit = (thresholds.conf_ratio * base).max(thresholds.conf_floor);
                if c > limit {
                    return Decision::Replan(format!("agent {} obstacle cost {c:.3e} exceeds {limit:.3e}", a.agent_id));
                }
            }
            _ => monitor.baseline[i] = Some((p.version, c)),
        }
    }
    Decision::None
}

/// Renegotiates from the agents' current positions on the current map. The
/// new plans start at global step `start_step`, the step those positions
/// were reached.
pub fn replan(scenario: &Scenario, positions: &[Point2], start_step: usize) -> Result<(Scenario, PlanOutcome)> {
    let mut next = scenario.clone();
    for (a, p) in next.agents.iter_mut().zip(positions) {
        a.start = *p;
    }
    let mut outcome = plan_roles(&next)?;
    for r in &mut outcome.roles {
        r.start_step = start_step;
    }
    Ok((next, outcome))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplanEvent {
    pub step: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub plan: Option<PlanOutcome>,
    pub trace: Option<SimulationTrace>,
    pub metrics: Option<Metrics>,
    pub replans: Vec<ReplanEvent>,
    pub aborted: Option<String>,
    /// Latest role of every agent when the run ended.
    pub final_roles: Vec<ProcessRole>,
}

/// Full pipeline. Infeasible negotiation or assignment ends the run before
/// any agent starts; a failed renegotiation stops it mid-way.
pub fn run_central(scenario: &Scenario) -> Result<RunOutcome> {
    let plan = match plan_roles(scenario) {
        Ok(p) => p,
        Err(Error::Infeasible(msg)) => {
            return Ok(RunOutcome {
                plan: None,
                trace: None,
                metrics: None,
                replans: Vec::new(),
                aborted: Some(msg),
                final_roles: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let robots: Vec<RobotType> = scenario.agents.iter().map(|a| a.robot.clone()).collect();
    let channel = SharedChannel::new(&scenario.agent_ids(), scenario.grid.clone())?;
    for role in &plan.roles {
        channel.publish(role.clone(), 0)?;
    }
    let mut agents: Vec<AgentRuntime> = plan
        .roles
        .iter()
        .zip(&robots)
        .map(|(role, robot)| AgentRuntime::new(robot.clone(), role.clone(), plan.negotiation.sdf.clone(), 0, scenario.seed))
        .collect();
    let mut monitor = MonitorState {
        map_version: 0,
        sdf: plan.negotiation.sdf.clone(),
        baseline: vec![None; agents.len()],
    };
    let mut current = scenario.clone();
    let mut replans = Vec::new();
    let mut aborted = None;
    let max_steps = scenario.plan.steps + 1 + scenario.max_steps.unwrap_or(2 * (scenario.plan.steps + 1));

    let trace = run_simulation(
        &mut agents,
        &channel,
        &scenario.plan,
        &scenario.role_play,
        scenario.modes.schedule,
        max_steps,
        |step, channel, agents| {
            for ev in scenario.map_events.iter().filter(|e| e.step == step) {
                ev.apply(&mut current.grid);
                channel.publish_map(current.grid.clone());
            }
            let snapshot = channel.subscribe();
            let Decision::Replan(reason) = detect_problem(&snapshot, agents, &mut monitor, &current.thresholds, step + 1)
            else {
                return Ok(Control::Continue);
            };
            log::info!("step {step}: replanning ({reason})");
            replans.push(ReplanEvent { step, reason: reason.clone() });
            monitor.map_version = snapshot.map.version;
            monitor.sdf = Arc::new(compute_sdf(&snapshot.map.grid));
            let positions: Vec<Point2> = agents.iter().map(|a| Point2::new(a.executed[0], a.executed[1])).collect();
            match replan(&current, &positions, step) {
                Ok((next, outcome)) => {
                    current = next;
                    for (agent, role) in agents.iter_mut().zip(&outcome.roles) {
                        agent.replace_role(role.clone());
                        channel.publish(role.clone(), step)?;
                    }
                    monitor.baseline.iter_mut().for_each(|b| *b = None);
                    Ok(Control::Continue)
                }
                Err(Error::Infeasible(msg)) => {
                    aborted = Some(format!("renegotiation at step {step} failed: {msg}"));
                    Ok(Control::Stop)
                }
                Err(e) => Err(e),
            }
        },
    )?;
    let m = metrics(&trace);
    Ok(RunOutcome {
        plan: Some(plan),
        final_roles: agents.into_iter().map(|a| a.role).collect(),
        metrics: Some(m),
        trace: Some(trace),
        replans,
        aborted,
    })
}
