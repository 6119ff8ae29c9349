//! JSON run summary.

use serde::Serialize;

use super::central::{ReplanEvent, RunOutcome};
use super::scenario::{Modes, Scenario};
use crate::role_playing::Metrics;

#[derive(Clone, Debug, Serialize)]
pub struct AssignmentEntry {
    pub agent_id: usize,
    pub role_id: usize,
    /// `null` when the pair is infeasible.
    pub cost: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub modes: Modes,
    pub feasible: bool,
    pub aborted: Option<String>,
    pub uncoverable_roles: Vec<usize>,
    pub assignment: Vec<AssignmentEntry>,
    pub total_cost: Option<f64>,
    pub iterations_mean: Option<f64>,
    pub trajectories_clear: bool,
    pub replans: Vec<ReplanEvent>,
    pub metrics: Option<Metrics>,
    pub steps_executed: usize,
}

impl RunReport {
    pub fn new(scenario: &Scenario, outcome: &RunOutcome) -> Self {
        let mut report = RunReport {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            modes: scenario.modes,
            feasible: outcome.plan.is_some() && outcome.aborted.is_none(),
            aborted: outcome.aborted.clone(),
            uncoverable_roles: Vec::new(),
            assignment: Vec::new(),
            total_cost: None,
            iterations_mean: None,
            trajectories_clear: false,
            replans: outcome.replans.clone(),
            metrics: outcome.metrics.clone(),
            steps_executed: outcome.trace.as_ref().map_or(0, |t| t.frames.len()),
        };
        if let Some(plan) = &outcome.plan {
            report.uncoverable_roles = plan.negotiation.uncoverable.clone();
            report.assignment = plan
                .assignment
                .pairs
                .iter()
                .map(|&(a, r)| AssignmentEntry {
                    agent_id: scenario.agents[a].agent_id,
                    role_id: scenario.roles[r].role_id,
                    cost: plan.q.get(a, r),
                })
                .collect();
            report.total_cost = Some(plan.assignment.total_cost);
            report.iterations_mean = Some(plan.iterations_mean());
            report.trajectories_clear = plan.all_clear();
        }
        report
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
