//! One role-playing agent: track, rebuild the conflict field, re-solve the
//! remaining trajectory.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::channel::Snapshot;
use super::conflict::{make_conflict_field, SharingMode};
use super::sim::segment_min;
use crate::envmap::{compute_sdf, RobotType, SignedDistanceField};
use crate::gp::{
    obstacle_residual, qualification_value, solve_lm, trajectory_factors, Anchors, Factor, FixMask, PlanSettings,
    ProcessRole, SolverParams,
};
use crate::{Point2, State};

/// Knobs of the role-playing phase.
#[derive(Clone, Debug, PartialEq)]
pub struct RolePlaySettings {
    pub mode: SharingMode,
    /// Steps of lookahead for stamping; `None` means the rest of the plan.
    pub horizon: Option<usize>,
    /// Standard deviation of simulated tracking noise (meters).
    pub noise_std: f64,
    pub seed: u64,
    /// Re-solve every step, or only when the plan touches the conflict band
    /// or tracking drifted.
    pub replan_every_step: bool,
    /// Consecutive solver failures before an agent reports distress.
    pub distress_after: usize,
    pub solver: SolverParams,
    /// Standard deviation of pairwise conflict factors.
    pub sigma_pair: f64,
    /// Also try delayed starts when the solved plan still overlaps the plan
    /// of an agent with a lower id.
    pub yield_to_priority: bool,
}

impl Default for RolePlaySettings {
    fn default() -> Self {
        Self {
            mode: SharingMode::ConflictField,
            horizon: None,
            noise_std: 0.0,
            seed: 0,
            replan_every_step: true,
            distress_after: 5,
            solver: SolverParams { max_iterations: 50, ..SolverParams::default() },
            sigma_pair: 0.05,
            yield_to_priority: true,
        }
    }
}

/// Per-agent mutable state during role-playing.
#[derive(Clone, Debug)]
pub struct AgentRuntime {
    pub agent_id: usize,
    pub robot: RobotType,
    /// Current plan; its `start_step` anchors local indices to global steps.
    pub role: ProcessRole,
    /// Global step about to be executed.
    pub step: usize,
    pub static_field: Arc<SignedDistanceField>,
    pub map_version: u64,
    pub failures: usize,
    pub distressed: bool,
    /// State committed at the last executed step.
    pub executed: State,
    /// LM iterations spent in the last step.
    pub last_iterations: usize,
    rng: ChaCha8Rng,
}

impl AgentRuntime {
    pub fn new(
        robot: RobotType,
        role: ProcessRole,
        static_field: Arc<SignedDistanceField>,
        map_version: u64,
        seed: u64,
    ) -> Self {
        let agent_id = role.agent_id;
        let executed = role.states[0];
        Self {
            agent_id,
            robot,
            step: role.start_step,
            role,
            static_field,
            map_version,
            failures: 0,
            distressed: false,
            executed,
            last_iterations: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ (agent_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }

    /// Swaps in a fresh plan (after renegotiation), keeping the step counter.
    pub fn replace_role(&mut self, role: ProcessRole) {
        self.role = role;
        self.failures = 0;
        self.distressed = false;
    }

    /// `true` once the plan's last state has been executed.
    pub fn finished(&self) -> bool {
        self.step > self.role.start_step + self.role.steps()
    }
}

/// Planned position at `step` plus zero-mean Gaussian noise.
pub fn track_position(role: &ProcessRole, step: usize, noise_std: f64, rng: &mut impl rand::Rng) -> Point2 {
    let p = role.position_at_step(step);
    if noise_std <= 0.0 {
        return p;
    }
    let normal = Normal::new(0.0, noise_std).expect("finite noise");
    p + Point2::new(normal.sample(rng), normal.sample(rng))
}

/// Whether `states` (starting at global step `k`) come within the summed
/// radii of a published plan of a lower-id agent, moving linearly between
/// supports.
fn overlaps_priority(
    states: &[State],
    snapshot: &Snapshot,
    agent: &AgentRuntime,
    radii: &dyn Fn(usize) -> f64,
    k: usize,
) -> bool {
    snapshot.others(agent.agent_id).filter(|o| o.role.agent_id < agent.agent_id).any(|o| {
        let r = agent.robot.radius + radii(o.role.agent_id);
        let gap = |i: usize| Point2::new(states[i][0], states[i][1]) - o.role.position_at_step(k + i);
        (1..states.len()).any(|i| segment_min(gap(i - 1), gap(i)) < r)
    })
}

/// Holds the first position for `w` steps, then covers the same path over
/// the remaining steps. The first state is kept as is.
fn hold_then_follow(states: &[State], w: usize, dt: f64) -> Vec<State> {
    let n = states.len() - 1;
    let pos = |s: &State| Point2::new(s[0], s[1]);
    let positions: Vec<Point2> = (0..=n)
        .map(|i| {
            if i <= w {
                return pos(&states[0]);
            }
            let u = (i - w) as f64 * n as f64 / (n - w) as f64;
            let j = (u.floor() as usize).min(n - 1);
            let t = u - j as f64;
            pos(&states[j]) * (1.0 - t) + pos(&states[j + 1]) * t
        })
        .collect();
    let mut out: Vec<State> = (0..=n)
        .map(|i| {
            let v = if i == 0 || i == n {
                Point2::zeros()
            } else {
                (positions[i + 1] - positions[i - 1]) / (2.0 * dt)
            };
            State::new(positions[i].x, positions[i].y, v.x, v.y)
        })
        .collect();
    out[0] = states[0];
    out[n] = states[n];
    out
}

/// Executes one step for `agent` against `snapshot` and advances its step.
/// Returns `true` if the plan was re-solved successfully.
pub fn role_play_step(
    agent: &mut AgentRuntime,
    snapshot: &Snapshot,
    radii: &dyn Fn(usize) -> f64,
    plan: &PlanSettings,
    settings: &RolePlaySettings,
) -> bool {
    let k = agent.step;
    if snapshot.map.version != agent.map_version {
        agent.static_field = Arc::new(compute_sdf(&snapshot.map.grid));
        agent.map_version = snapshot.map.version;
    }
    let start = agent.role.start_step;
    let local = k.saturating_sub(start).min(agent.role.steps());
    let tracked = track_position(&agent.role, k, settings.noise_std, &mut agent.rng);
    agent.last_iterations = 0;
    if local >= agent.role.steps() {
        agent.executed = agent.role.states[agent.role.steps()];
        agent.step += 1;
        return true;
    }

    let horizon = settings.horizon.unwrap_or(agent.role.steps() - local);
    let field = make_conflict_field(
        snapshot,
        agent.agent_id,
        agent.static_field.clone(),
        agent.robot.radius,
        agent.robot.epsilon_safe,
        radii,
        k,
        horizon,
        settings.mode,
    );

    let mut init: Vec<State> = agent.role.states[local..].to_vec();
    let drift = (Point2::new(init[0][0], init[0][1]) - tracked).norm();
    init[0][0] = tracked.x;
    init[0][1] = tracked.y;
    let anchors = Anchors { start: init[0], start_mask: FixMask::Full, goal: init.last().copied() };
    let mut factors = trajectory_factors(init.len(), &agent.robot, k, &anchors, plan);
    if settings.mode == SharingMode::PairwiseFactor {
        for other in snapshot.others(agent.agent_id) {
            let r = agent.robot.radius + radii(other.role.agent_id);
            for i in 1..init.len().min(horizon + 1) {
                factors.push(Factor::PairwiseConflict {
                    k: i,
                    other: other.role.position_at_step(k + i),
                    radii: r,
                    epsilon: agent.robot.epsilon_safe,
                    sigma: settings.sigma_pair,
                });
            }
        }
    }

    let needs_solve = settings.replan_every_step
        || drift > 0.0
        || settings.mode == SharingMode::PairwiseFactor
        || init.iter().enumerate().any(|(i, s)| {
            obstacle_residual(s, &field, k + i, agent.robot.radius, agent.robot.epsilon_safe).0 > 0.0
        });
    let mut ok = true;
    if needs_solve {
        let solved = plan.prior().and_then(|prior| {
            let mut best = solve_lm(&factors, &init, &prior, Some(&field), &settings.solver)?;
            if settings.yield_to_priority
                && settings.mode != SharingMode::LastPosition
                && overlaps_priority(&best.states, snapshot, agent, radii, k)
            {
                let remaining = init.len() - 1;
                let mut spent = best.iterations;
                for w in [remaining / 4, remaining / 2, 2 * remaining / 3] {
                    if w == 0 {
                        continue;
                    }
                    let held = hold_then_follow(&init, w, agent.role.dt);
                    let Ok(report) = solve_lm(&factors, &held, &prior, Some(&field), &settings.solver) else {
                        continue;
                    };
                    spent += report.iterations;
                    if !overlaps_priority(&report.states, snapshot, agent, radii, k)
                        && (report.final_error < best.final_error
                            || overlaps_priority(&best.states, snapshot, agent, radii, k))
                    {
                        best = report;
                    }
                }
                best.iterations = spent;
            }
            Ok(best)
        });
        match solved {
            Ok(report) => {
                agent.last_iterations = report.iterations;
                agent.role.states.truncate(local);
                agent.role.states.extend(report.states);
                agent.failures = 0;
            }
            Err(e) => {
                log::warn!("agent {} step {k}: {e}", agent.agent_id);
                agent.failures += 1;
                ok = false;
                if agent.failures >= settings.distress_after {
                    agent.distressed = true;
                }
            }
        }
    }
    if let Ok(cost) = qualification_value(&agent.role.states, start, &*agent.static_field, &agent.robot, plan) {
        agent.role.cost = cost;
    }
    agent.executed = agent.role.states[local];
    agent.step += 1;
    ok
}
