//! Factor sets for single-agent trajectory optimization and the
//! qualification value of a trajectory.

use super::factors::{conf_cost, DistanceField, Factor, FixMask};
use super::solver::{solve_lm, SolveReport, SolverParams};
use super::{GpPrior, ProcessRole};
use crate::envmap::RobotType;
use crate::{Error, Result, State};

/// Hyperparameters shared by every trajectory optimization of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanSettings {
    /// Isotropic power-spectral density `Qc = qc I`.
    pub qc: f64,
    /// Weight of `F_gp` in the qualification value `lambda F_gp + F_conf`.
    pub lambda: f64,
    /// Intervals `N` per trajectory.
    pub steps: usize,
    pub total_time: f64,
    /// Standard deviation of the start/goal fix-state factors.
    pub sigma_fix: f64,
    /// Standard deviation of the speed-limit factors.
    pub sigma_vel: f64,
    pub solver: SolverParams,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            qc: 1.0,
            lambda: 1.0,
            steps: 99,
            total_time: 20.0,
            sigma_fix: 1e-4,
            sigma_vel: 0.01,
            solver: SolverParams::default(),
        }
    }
}

impl PlanSettings {
    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    pub fn prior(&self) -> Result<GpPrior> {
        GpPrior::isotropic(self.qc, self.dt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::input("steps must be at least 1"));
        }
        for (name, v) in [
            ("qc", self.qc),
            ("total_time", self.total_time),
            ("sigma_fix", self.sigma_fix),
            ("sigma_vel", self.sigma_vel),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::input(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        self.solver.validate()
    }
}

/// Ends of a trajectory segment to pin.
#[derive(Clone, Debug, PartialEq)]
pub struct Anchors {
    pub start: State,
    pub start_mask: FixMask,
    pub goal: Option<State>,
}

/// Prior chain, obstacle and speed factors on every state, plus start/goal
/// fix-state factors. `start_step` is the global index of state 0.
pub fn trajectory_factors(
    n_states: usize,
    robot: &RobotType,
    start_step: usize,
    anchors: &Anchors,
    settings: &PlanSettings,
) -> Vec<Factor> {
    let mut f = Vec::with_capacity(4 * n_states);
    for k in 0..n_states.saturating_sub(1) {
        f.push(Factor::GpPrior { k });
    }
    for k in 0..n_states {
        f.push(Factor::Obstacle {
            k,
            step: start_step + k,
            radius: robot.radius,
            epsilon: robot.epsilon_safe,
            sigma: robot.sigma_obs,
        });
        f.push(Factor::VelocityLimit { k, v_max: robot.v_max, sigma: settings.sigma_vel });
    }
    f.push(Factor::FixState { k: 0, target: anchors.start, mask: anchors.start_mask, sigma: settings.sigma_fix });
    if let Some(goal) = anchors.goal {
        f.push(Factor::FixState { k: n_states - 1, target: goal, mask: FixMask::Full, sigma: settings.sigma_fix });
    }
    f
}

/// `lambda F_gp + F_conf` of a trajectory.
pub fn qualification_value(
    states: &[State],
    start_step: usize,
    field: &dyn DistanceField,
    robot: &RobotType,
    settings: &PlanSettings,
) -> Result<f64> {
    let prior = settings.prior()?;
    Ok(settings.lambda * prior.cost(states)
        + conf_cost(states, settings.dt(), start_step, field, robot.radius, robot.epsilon_safe))
}

/// Optimizes a full trajectory from `init` with its first and last states
/// pinned, and scores it.
pub fn optimize_role(
    agent_id: usize,
    role_id: usize,
    init: &[State],
    robot: &RobotType,
    field: &dyn DistanceField,
    settings: &PlanSettings,
) -> Result<(ProcessRole, SolveReport)> {
    if init.len() < 2 {
        return Err(Error::input("initial trajectory needs at least two states"));
    }
    let anchors = Anchors { start: init[0], start_mask: FixMask::Full, goal: init.last().copied() };
    let factors = trajectory_factors(init.len(), robot, 0, &anchors, settings);
    let prior = settings.prior()?;
    let report = solve_lm(&factors, init, &prior, Some(field), &settings.solver)?;
    let mut role = ProcessRole::new(agent_id, role_id, report.states.clone(), settings.dt())?;
    role.cost = qualification_value(&role.states, 0, field, robot, settings)?;
    Ok((role, report))
}
