//! The four subcommands. Each writes its artifacts under an output directory
//! and returns the in-memory result for callers that want it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ModeCell, Overrides, Stage, Suite};
use super::schema::{AGGREGATE_HEADER, METRICS_HEADER};
use super::svg;
use crate::engine::{plan_roles, role_negotiation, run_central, NegotiationResult, RunOutcome, RunReport, Scenario};
use crate::fmt::sig;
use crate::gp::trajectory_csv;
use crate::{Error, Result};

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn negotiation_text(scenario: &Scenario, neg: &NegotiationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", scenario.name);
    let _ = writeln!(out, "feasible: {}", neg.feasible);
    let ids: Vec<String> = neg.uncoverable.iter().map(|r| r.to_string()).collect();
    let _ = writeln!(out, "uncoverable_roles: [{}]", ids.join(", "));
    for t in &neg.types {
        let _ = writeln!(
            out,
            "type {}: radius {} m, {} E-Map nodes, {} edges",
            t.robot.type_id,
            sig(t.robot.radius, 6),
            t.emap.nodes.len(),
            t.emap.edges.len()
        );
    }
    for (a, agent) in scenario.agents.iter().enumerate() {
        let reach: Vec<String> = scenario
            .roles
            .iter()
            .enumerate()
            .filter(|&(r, _)| neg.init_paths[a][r].is_some())
            .map(|(_, role)| role.role_id.to_string())
            .collect();
        let _ = writeln!(out, "agent {} reaches roles: [{}]", agent.agent_id, reach.join(", "));
    }
    out
}

/// Negotiation report, per-type E-Map dumps and an SDF render.
pub fn cmd_negotiate(scenario: &Scenario, out_dir: &Path) -> Result<NegotiationResult> {
    let neg = role_negotiation(scenario)?;
    let text = negotiation_text(scenario, &neg);
    write(out_dir, "negotiation.txt", &text)?;
    print!("{text}");
    for t in &neg.types {
        write(out_dir, &format!("emap_{}.txt", t.robot.type_id), t.emap.to_text())?;
        write(out_dir, &format!("emap_{}.svg", t.robot.type_id), svg::emap_svg(&t.feasible, &t.emap))?;
    }
    write(out_dir, "sdf.svg", svg::sdf_svg(&scenario.grid, &neg.sdf))?;
    if !neg.feasible {
        let ids: Vec<String> = neg.uncoverable.iter().map(|r| r.to_string()).collect();
        return Err(Error::Infeasible(format!("role(s) {} cannot be reached", ids.join(", "))));
    }
    Ok(neg)
}

fn aborted(msg: String) -> RunOutcome {
    RunOutcome { plan: None, trace: None, metrics: None, replans: Vec::new(), aborted: Some(msg), final_roles: Vec::new() }
}

/// Plans without role-playing; infeasibility is folded into the outcome.
pub fn plan_outcome(scenario: &Scenario) -> Result<RunOutcome> {
    match plan_roles(scenario) {
        Ok(plan) => Ok(RunOutcome {
            final_roles: plan.roles.clone(),
            plan: Some(plan),
            trace: None,
            metrics: None,
            replans: Vec::new(),
            aborted: None,
        }),
        Err(Error::Infeasible(msg)) => Ok(aborted(msg)),
        Err(e) => Err(e),
    }
}

fn write_plan_artifacts(scenario: &Scenario, outcome: &RunOutcome, out_dir: &Path, render: bool) -> Result<()> {
    let Some(plan) = &outcome.plan else { return Ok(()) };
    let (agent_ids, role_ids) = (scenario.agent_ids(), scenario.role_ids());
    write(out_dir, "q_matrix.csv", plan.q.to_csv(&agent_ids, &role_ids))?;
    write(out_dir, "assignment.csv", plan.assignment.to_csv(&plan.q, &agent_ids, &role_ids))?;
    write(out_dir, "trajectories.csv", trajectory_csv(&plan.roles))?;
    if render {
        let sources: Vec<_> = scenario.agents.iter().map(|a| (a.agent_id, a.start)).collect();
        let dests: Vec<_> = scenario.roles.iter().map(|r| (r.role_id, r.destination)).collect();
        write(out_dir, "plan.svg", svg::plan_svg(&scenario.grid, &sources, &dests, &plan.roles))?;
    }
    Ok(())
}

fn finish(outcome: &RunOutcome) -> Result<()> {
    match &outcome.aborted {
        Some(msg) => Err(Error::Infeasible(msg.clone())),
        None => Ok(()),
    }
}

/// Q matrix, assignment, initial roles and a plan render.
pub fn cmd_plan(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = plan_outcome(scenario)?;
    let report = RunReport::new(scenario, &outcome);
    write(out_dir, "report.json", report.to_json())?;
    write_plan_artifacts(scenario, &outcome, out_dir, true)?;
    if let Some(plan) = &outcome.plan {
        println!(
            "{}: total cost {}, mean iterations {}, trajectories clear: {}",
            scenario.name,
            sig(plan.assignment.total_cost, 6),
            sig(plan.iterations_mean(), 4),
            plan.all_clear()
        );
    }
    finish(&outcome).map(|_| outcome)
}

/// One metrics row in the documented schema.
pub fn metrics_row(scenario: &str, mode: &str, report: &RunReport) -> String {
    let f = |v: Option<f64>| v.map_or("nan".to_string(), |v| sig(v, 9));
    let m = report.metrics.as_ref();
    format!(
        "{scenario},{mode},{},{},{},{},{},{}",
        report.feasible && report.trajectories_clear,
        f(report.total_cost),
        f(report.iterations_mean),
        f(m.map(|m| m.min_distance)),
        f(m.map(|m| m.avg_jerk)),
        m.map_or(0, |m| m.collision_frames)
    )
}

fn mode_label(scenario: &Scenario) -> String {
    let s = serde_json::to_value(scenario.modes).expect("modes serialize");
    format!("{}/{}/{}", s["init"].as_str().unwrap_or(""), s["assign"].as_str().unwrap_or(""), s["sharing"].as_str().unwrap_or(""))
}

/// Full run: trace, metrics, final roles and an animated render.
pub fn cmd_simulate(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    let outcome = run_central(scenario)?;
    let report = RunReport::new(scenario, &outcome);
    write(out_dir, "report.json", report.to_json())?;
    write_plan_artifacts(scenario, &outcome, out_dir, false)?;
    write(out_dir, "metrics.csv", format!("{METRICS_HEADER}\n{}\n", metrics_row(&scenario.name, &mode_label(scenario), &report)))?;
    if let Some(trace) = &outcome.trace {
        write(out_dir, "trace.csv", trace.to_csv())?;
        write(out_dir, "trace.svg", svg::trace_svg(&scenario.grid, trace))?;
        write(out_dir, "final_roles.csv", trajectory_csv(&outcome.final_roles))?;
    }
    if let Some(m) = &outcome.metrics {
        println!(
            "{}: min distance {} m, avg jerk {}, collision frames {}, replans {}",
            scenario.name,
            sig(m.min_distance, 4),
            sig(m.avg_jerk, 4),
            m.collision_frames,
            outcome.replans.len()
        );
    }
    finish(&outcome).map(|_| outcome)
}

/// One cell of a bench run.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub scenario: String,
    pub mode: String,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn feasible(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.feasible && r.trajectories_clear)
    }

    fn csv(&self) -> String {
        match &self.report {
            Some(r) => metrics_row(&self.scenario, &self.mode, r),
            None => format!("{},{},false,nan,nan,nan,nan,0", self.scenario, self.mode),
        }
    }
}

fn cell_scenario(base: &Scenario, cell: &ModeCell, sigma: Option<f64>, seed: Option<u64>, o: &Overrides) -> Result<Scenario> {
    let mut s = base.clone();
    Overrides {
        seed,
        init: cell.init.or(o.init),
        assign: cell.assign.or(o.assign),
        sharing: cell.sharing.or(o.sharing),
        sigma_obs: sigma,
    }
    .apply(&mut s)?;
    if let Some(sigma) = sigma {
        s.name = format!("{}@sigma={}", s.name, sig(sigma, 4));
    }
    Ok(s)
}

fn run_cell(stage: Stage, scenario: &Scenario, cell_dir: &Path) -> Result<RunReport> {
    let outcome = match stage {
        Stage::Plan => plan_outcome(scenario)?,
        Stage::Simulate => run_central(scenario)?,
    };
    let report = RunReport::new(scenario, &outcome);
    write(cell_dir, "report.json", report.to_json())?;
    write_plan_artifacts(scenario, &outcome, cell_dir, false)?;
    if let Some(trace) = &outcome.trace {
        write(cell_dir, "trace.csv", trace.to_csv())?;
    }
    Ok(report)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Per-mode aggregates in the documented schema.
pub fn aggregate(rows: &[BenchRow], modes: &[ModeCell]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for cell in modes {
        let rs: Vec<&BenchRow> = rows.iter().filter(|r| r.mode == cell.label).collect();
        let reports = || rs.iter().filter_map(|r| r.report.as_ref());
        let feasible = rs.iter().filter(|r| r.feasible()).count();
        let pct = if rs.is_empty() { 0.0 } else { 100.0 * feasible as f64 / rs.len() as f64 };
        let metric = |f: fn(&crate::role_playing::Metrics) -> f64| mean(reports().filter_map(|r| r.metrics.as_ref().map(f)));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            cell.label,
            rs.len(),
            sig(pct, 6),
            sig(mean(reports().filter_map(|r| r.total_cost)), 9),
            sig(mean(reports().filter_map(|r| r.iterations_mean)), 6),
            sig(metric(|m| m.min_distance), 6),
            sig(metric(|m| m.avg_jerk), 6),
            reports().filter_map(|r| r.metrics.as_ref()).map(|m| m.collision_frames).sum::<usize>()
        );
    }
    out
}

/// Runs every scenario x sigma x mode cell of `suite`; failures become
/// infeasible rows. Writes `metrics.csv` and `aggregate.csv`.
pub fn cmd_bench(suite: &Suite, out_dir: &Path, overrides: &Overrides) -> Result<Vec<BenchRow>> {
    let sigmas: Vec<Option<f64>> = match overrides.sigma_obs {
        Some(s) => vec![Some(s)],
        None if suite.sigma_obs.is_empty() => vec![None],
        None => suite.sigma_obs.iter().map(|&s| Some(s)).collect(),
    };
    let seed = overrides.seed.or(suite.seed);
    let mut cells = Vec::new();
    for base in &suite.scenarios {
        for &sigma in &sigmas {
            for mode in &suite.modes {
                cells.push((base, sigma, mode));
            }
        }
    }
    let rows: Vec<BenchRow> = cells
        .par_iter()
        .map(|&(base, sigma, mode)| {
            let label = match sigma {
                Some(s) => format!("{}@sigma={}", base.name, sig(s, 4)),
                None => base.name.clone(),
            };
            let result = cell_scenario(base, mode, sigma, seed, overrides).and_then(|s| {
                let dir = out_dir.join(format!("{}_{}", label.replace(['@', '='], "_"), mode.label));
                run_cell(suite.stage, &s, &dir)
            });
            match result {
                Ok(report) => BenchRow { scenario: label, mode: mode.label.clone(), report: Some(report), error: None },
                Err(e) => {
                    log::warn!("{label} [{}]: {e}", mode.label);
                    BenchRow { scenario: label, mode: mode.label.clone(), report: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect();
    let mut metrics = format!("{METRICS_HEADER}\n");
    for r in &rows {
        metrics.push_str(&r.csv());
        metrics.push('\n');
    }
    write(out_dir, "metrics.csv", &metrics)?;
    let agg = aggregate(&rows, &suite.modes);
    write(out_dir, "aggregate.csv", &agg)?;
    Ok(rows)
}
