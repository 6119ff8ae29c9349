//! Orchestration of negotiation, assignment, role-playing and monitoring.

pub mod central;
pub mod negotiation;
pub mod report;
pub mod scenario;

pub use central::{
    detect_problem, plan_roles, replan, run_central, Decision, MonitorState, PlanOutcome, ReplanEvent, RunOutcome,
    IDLE_ROLE,
};
pub use negotiation::{build_type_env, initial_waypoints, role_negotiation, trajectory_clear, NegotiationResult, TypeEnv};
pub use report::{AssignmentEntry, RunReport};
pub use scenario::{AgentSpec, AssignMode, InitMode, MapEvent, Modes, RectEdit, RoleSpec, Scenario, Thresholds};
