use std::path::Path;

use role_engine::cli::parse_scenario;
use role_engine::engine::*;
use role_engine::envmap::{compute_sdf, OccupancyGrid};
use role_engine::role_playing::SharingMode;
use role_engine::{Error, Point2};

fn scenario(agents: &[(f64, f64)], roles: &[(f64, f64)], reserved: bool, steps: usize) -> Scenario {
    let mut text = format!(
        "name = \"t\"\nseed = 5\n[map]\nbundled = \"boxes\"\n[plan]\nsteps = {steps}\ntotal_time = 12.0\n\
         [[robot_types]]\nid = \"r\"\nradius = 0.1\nv_max = 0.5\nsigma_obs = 0.1\nepsilon = 0.05\n"
    );
    for (i, (x, y)) in agents.iter().enumerate() {
        text += &format!("[[agents]]\nid = {i}\ntype = \"r\"\nstart = [{x}, {y}]\n");
    }
    for (i, (x, y)) in roles.iter().enumerate() {
        text += &format!("[[roles]]\nid = {i}\ndestination = [{x}, {y}]\n");
        if reserved {
            text += &format!("reserved_for = {i}\n");
        }
    }
    parse_scenario(&text, Path::new(".")).unwrap()
}

/// 3 m x 2 m room split by a wall at x = 1.4..1.6 with a 0.6 m gap at the
/// bottom.
fn walled_room() -> OccupancyGrid {
    let mut g = OccupancyGrid::new(60, 40, 0.05).unwrap();
    g.fill_rect(Point2::new(1.4, 0.0), Point2::new(1.6, 1.4), true);
    g
}

fn with_grid(mut s: Scenario, grid: OccupancyGrid) -> Scenario {
    s.grid = grid;
    s.validate().unwrap();
    s
}

fn event(step: usize, min: [f64; 2], max: [f64; 2]) -> MapEvent {
    MapEvent { step, rects: vec![RectEdit { min, max, occupied: true }] }
}

fn final_position(outcome: &RunOutcome, agent: usize) -> Point2 {
    let trace = outcome.trace.as_ref().unwrap();
    trace.position(trace.frames.len() - 1, agent)
}

#[test]
fn diamond_swap_reaches_destinations() {
    let pts = [(1.0, 0.3), (1.7, 1.0), (1.0, 1.7), (0.3, 1.0)];
    let opposite = [pts[2], pts[3], pts[0], pts[1]];
    let s = with_grid(scenario(&pts, &opposite, true, 60), OccupancyGrid::new(40, 40, 0.05).unwrap());
    let outcome = run_central(&s).unwrap();
    assert!(outcome.aborted.is_none());
    for (i, &(x, y)) in opposite.iter().enumerate() {
        let d = (final_position(&outcome, i) - Point2::new(x, y)).norm();
        assert!(d <= 0.05, "agent {i} stopped {d} m from its destination");
    }
    assert_eq!(outcome.metrics.unwrap().collision_frames, 0);
}

#[test]
fn single_agent_ends_at_its_destination() {
    let s = with_grid(scenario(&[(0.5, 0.5)], &[(2.5, 0.5)], false, 40), walled_room());
    let outcome = run_central(&s).unwrap();
    let d = (final_position(&outcome, 0) - Point2::new(2.5, 0.5)).norm();
    assert!(d <= 0.05, "{d}");
    assert!(outcome.replans.is_empty());
    assert!(trajectory_clear(&outcome.final_roles[0].states, &walled_room()));
}

#[test]
fn infeasible_scenario_launches_no_agents() {
    let mut grid = walled_room();
    grid.fill_rect(Point2::new(1.4, 1.4), Point2::new(1.6, 2.0), true);
    let s = with_grid(scenario(&[(0.5, 0.5)], &[(2.5, 0.5)], false, 40), grid);
    assert!(matches!(plan_roles(&s), Err(Error::Infeasible(_))));
    let outcome = run_central(&s).unwrap();
    assert!(outcome.aborted.is_some());
    assert!(outcome.trace.is_none() && outcome.final_roles.is_empty());
    let report = RunReport::new(&s, &outcome);
    assert!(!report.feasible);
    assert_eq!(report.steps_executed, 0);
    assert_eq!(report.uncoverable_roles, Vec::<usize>::new());
}

#[test]
fn map_change_triggers_one_replan_that_avoids_the_obstacle() {
    let mut s = with_grid(scenario(&[(0.5, 0.5)], &[(2.5, 0.5)], false, 40), walled_room());
    s.map_events = vec![event(5, [1.4, 1.4], [1.6, 1.6])];
    let outcome = run_central(&s).unwrap();
    assert!(outcome.aborted.is_none());
    assert_eq!(outcome.replans.len(), 1, "{:?}", outcome.replans);
    assert_eq!(outcome.replans[0].step, 5);
    let d = (final_position(&outcome, 0) - Point2::new(2.5, 0.5)).norm();
    assert!(d <= 0.05, "{d}");

    let mut changed = walled_room();
    changed.fill_rect(Point2::new(1.4, 1.4), Point2::new(1.6, 1.6), true);
    let sdf = compute_sdf(&changed);
    let role = &outcome.final_roles[0];
    assert_eq!(role.start_step, 5);
    for st in &role.states {
        let dist = sdf.value(&Point2::new(st[0], st[1]));
        assert!(dist > 0.1, "replanned state {st:?} is {dist} m from an obstacle");
    }
}

#[test]
fn sealing_the_only_passage_aborts_after_renegotiation() {
    let mut s = with_grid(scenario(&[(0.5, 0.5)], &[(2.5, 0.5)], false, 40), walled_room());
    s.map_events = vec![event(8, [1.4, 1.4], [1.6, 2.0])];
    let outcome = run_central(&s).unwrap();
    assert_eq!(outcome.replans.len(), 1);
    let reason = outcome.aborted.expect("run must abort");
    assert!(reason.contains("renegotiation"), "{reason}");
    assert!(outcome.trace.unwrap().frames.len() < 40);
}

#[test]
fn four_by_four_plan_has_a_four_by_four_q_matrix() {
    let agents = [(0.3, 0.3), (0.3, 1.7), (1.0, 0.3), (1.0, 1.7)];
    let roles = [(2.7, 0.3), (2.7, 1.7), (2.0, 0.3), (2.0, 1.7)];
    let s = with_grid(scenario(&agents, &roles, false, 30), walled_room());
    let plan = plan_roles(&s).unwrap();
    assert_eq!((plan.q.m, plan.q.n), (4, 4));
    let csv = plan.q.to_csv(&s.agent_ids(), &s.role_ids());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "agent_id,role_0,role_1,role_2,role_3");
    assert!(lines.iter().all(|l| l.split(',').count() == 5));
    assert_eq!(plan.assignment.pairs.len(), 4);
    assert_eq!(plan.roles.len(), 4);
}

#[test]
fn idle_agents_hold_position() {
    let s = with_grid(scenario(&[(0.5, 0.5), (0.5, 1.5)], &[(2.5, 0.5)], false, 30), walled_room());
    let plan = plan_roles(&s).unwrap();
    let idle: Vec<_> = plan.roles.iter().filter(|r| r.role_id == IDLE_ROLE).collect();
    assert_eq!(idle.len(), 1);
    let first = idle[0].states[0];
    assert!(idle[0].states.iter().all(|st| (st - first).norm() == 0.0));
}

#[test]
fn distress_requests_a_replan() {
    let s = with_grid(scenario(&[(0.5, 0.5)], &[(2.5, 0.5)], false, 20), walled_room());
    let plan = plan_roles(&s).unwrap();
    let channel = role_engine::role_playing::SharedChannel::new(&s.agent_ids(), s.grid.clone()).unwrap();
    channel.publish(plan.roles[0].clone(), 0).unwrap();
    let sdf = plan.negotiation.sdf.clone();
    let mut agent =
        role_engine::role_playing::AgentRuntime::new(s.agents[0].robot.clone(), plan.roles[0].clone(), sdf.clone(), 0, 1);
    let mut monitor = MonitorState { map_version: 0, sdf, baseline: vec![None] };
    let snap = channel.subscribe();
    assert_eq!(
        detect_problem(&snap, std::slice::from_ref(&agent), &mut monitor, &s.thresholds, 1),
        Decision::None
    );
    agent.distressed = true;
    assert!(matches!(
        detect_problem(&snap, std::slice::from_ref(&agent), &mut monitor, &s.thresholds, 1),
        Decision::Replan(_)
    ));
}

#[test]
fn sharing_modes_all_finish_an_easy_crossing() {
    for mode in [SharingMode::LastPosition, SharingMode::ConflictField, SharingMode::PairwiseFactor] {
        let mut s = with_grid(
            scenario(&[(0.3, 0.3), (0.3, 1.7)], &[(1.1, 1.7), (1.1, 0.3)], true, 40),
            OccupancyGrid::new(30, 40, 0.05).unwrap(),
        );
        s.role_play.mode = mode;
        s.modes.sharing = mode;
        let outcome = run_central(&s).unwrap();
        assert!(outcome.aborted.is_none(), "{mode:?}");
        assert!(outcome.metrics.unwrap().min_distance.is_finite());
    }
}
