//! Step-synchronous simulation of all agents and its metrics.

use std::fmt::Write as _;

use super::agent::{role_play_step, AgentRuntime, RolePlaySettings};
use super::channel::SharedChannel;
use crate::fmt::sig;
use crate::gp::PlanSettings;
use crate::{Point2, Result, State};

/// Scheduling of agents within a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Agents take turns in agent order within a step; each reads a
    /// snapshot that already holds the plans published before it.
    /// Reproducible.
    RoundRobin,
    /// Agents run on their own threads and read whatever is published when
    /// they subscribe. Safe but not reproducible.
    Concurrent,
}

/// Executed states of every agent at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub states: Vec<State>,
    pub versions: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTrace {
    pub agent_ids: Vec<usize>,
    pub radii: Vec<f64>,
    pub dt: f64,
    pub frames: Vec<Frame>,
    /// `(step, agent_id)` of every distress report.
    pub distress: Vec<(usize, usize)>,
    /// LM iterations summed over all role-playing solves.
    pub iterations: usize,
}

impl SimulationTrace {
    pub fn position(&self, frame: usize, agent: usize) -> Point2 {
        let s = &self.frames[frame].states[agent];
        Point2::new(s[0], s[1])
    }

    /// CSV `step,agent_id,x,y,vx,vy,published_version`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,agent_id,x,y,vx,vy,published_version\n");
        for f in &self.frames {
            for (i, s) in f.states.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    f.step,
                    self.agent_ids[i],
                    sig(s[0], 9),
                    sig(s[1], 9),
                    sig(s[2], 9),
                    sig(s[3], 9),
                    f.versions[i]
                );
            }
        }
        out
    }
}

/// Returned by the per-step hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Runs role-playing until every agent has executed its plan or `max_steps`
/// frames were recorded. `hook` sees the channel and agents after every step
/// and may replace plans (e.g. after renegotiation) or stop the run.
pub fn run_simulation(
    agents: &mut [AgentRuntime],
    channel: &SharedChannel,
    plan: &PlanSettings,
    settings: &RolePlaySettings,
    schedule: Schedule,
    max_steps: usize,
    mut hook: impl FnMut(usize, &SharedChannel, &mut [AgentRuntime]) -> Result<Control>,
) -> Result<SimulationTrace> {
    let ids: Vec<usize> = agents.iter().map(|a| a.agent_id).collect();
    let radii_list: Vec<f64> = agents.iter().map(|a| a.robot.radius).collect();
    let radius_of = |id: usize| ids.iter().position(|&a| a == id).map_or(0.0, |i| radii_list[i]);
    let mut trace = SimulationTrace {
        agent_ids: ids.clone(),
        radii: radii_list.clone(),
        dt: plan.dt(),
        frames: Vec::new(),
        distress: Vec::new(),
        iterations: 0,
    };
    let mut step = agents.iter().map(|a| a.step).min().unwrap_or(0);
    while trace.frames.len() < max_steps && !agents.iter().all(AgentRuntime::finished) {
        match schedule {
            Schedule::RoundRobin => {
                for a in agents.iter_mut() {
                    let snapshot = channel.subscribe();
                    role_play_step(a, &snapshot, &radius_of, plan, settings);
                    channel.publish(a.role.clone(), step)?;
                }
            }
            Schedule::Concurrent => {
                std::thread::scope(|s| -> Result<()> {
                    let handles: Vec<_> = agents
                        .iter_mut()
                        .map(|a| {
                            let radius_of = &radius_of;
                            s.spawn(move || {
                                let snapshot = channel.subscribe();
                                role_play_step(a, &snapshot, radius_of, plan, settings);
                                channel.publish(a.role.clone(), step).map(|_| ())
                            })
                        })
                        .collect();
                    for h in handles {
                        h.join().expect("agent thread panicked")?;
                    }
                    Ok(())
                })?;
            }
        }
        let snapshot = channel.subscribe();
        trace.frames.push(Frame {
            step,
            states: agents.iter().map(|a| a.executed).collect(),
            versions: agents.iter().map(|a| snapshot.get(a.agent_id).map_or(0, |p| p.version)).collect(),
        });
        trace.iterations += agents.iter().map(|a| a.last_iterations).sum::<usize>();
        for a in agents.iter().filter(|a| a.distressed) {
            trace.distress.push((step, a.agent_id));
        }
        if hook(step, channel, agents)? == Control::Stop {
            break;
        }
        step += 1;
    }
    Ok(trace)
}

/// Aggregate quality measures of a run.
///
/// Pairwise distances are taken over the straight motion between
/// consecutive frames, not only at the frames, so agents cannot pass
/// through each other unnoticed.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub min_distance: f64,
    /// Mean norm of the third finite difference of positions over `dt^3`.
    pub avg_jerk: f64,
    /// Frames whose incoming motion (or the frame itself, for the first)
    /// brings some pair closer than the sum of their radii.
    pub collision_frames: usize,
}

/// Smallest `|a + s (b - a)|` over `s` in `[0, 1]`.
pub(crate) fn segment_min(a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let dd = d.norm_squared();
    let s = if dd > 0.0 { (-a.dot(&d) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * s).norm()
}

pub fn metrics(trace: &SimulationTrace) -> Metrics {
    let n = trace.agent_ids.len();
    let mut min_distance = f64::INFINITY;
    let mut collision_frames = 0;
    for f in 0..trace.frames.len() {
        let mut hit = false;
        for i in 0..n {
            for j in i + 1..n {
                let now = trace.position(f, i) - trace.position(f, j);
                let d = if f == 0 {
                    now.norm()
                } else {
                    segment_min(trace.position(f - 1, i) - trace.position(f - 1, j), now)
                };
                min_distance = min_distance.min(d);
                hit |= d < trace.radii[i] + trace.radii[j];
            }
        }
        collision_frames += usize::from(hit);
    }
    let dt3 = trace.dt.powi(3);
    let mut jerk_sum = 0.0;
    let mut jerk_count = 0usize;
    for i in 0..n {
        for f in 0..trace.frames.len().saturating_sub(3) {
            let p: [Point2; 4] = std::array::from_fn(|d| trace.position(f + d, i));
            jerk_sum += ((p[3] - p[2] * 3.0 + p[1] * 3.0 - p[0]) / dt3).norm();
            jerk_count += 1;
        }
    }
    Metrics {
        min_distance,
        avg_jerk: if jerk_count == 0 { 0.0 } else { jerk_sum / jerk_count as f64 },
        collision_frames,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(paths: Vec<Vec<(f64, f64)>>, radii: Vec<f64>) -> SimulationTrace {
        let frames = (0..paths[0].len())
            .map(|k| Frame {
                step: k,
                states: paths.iter().map(|p| State::new(p[k].0, p[k].1, 0.0, 0.0)).collect(),
                versions: vec![0; paths.len()],
            })
            .collect();
        SimulationTrace {
            agent_ids: (0..paths.len()).collect(),
            radii,
            dt: 0.5,
            frames,
            distress: Vec::new(),
            iterations: 0,
        }
    }

    #[test]
    fn stationary_and_linear_have_no_jerk() {
        let m = metrics(&trace(vec![vec![(1.0, 1.0); 6]], vec![0.1]));
        assert_eq!(m.avg_jerk, 0.0);
        assert_eq!(m.min_distance, f64::INFINITY);
        let line: Vec<(f64, f64)> = (0..8).map(|k| (0.1 * k as f64, 0.0)).collect();
        assert!(metrics(&trace(vec![line], vec![0.1])).avg_jerk.abs() < 1e-9);
    }

    #[test]
    fn parallel_lines() {
        let a: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 0.0)).collect();
        let b: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.0)).collect();
        let m = metrics(&trace(vec![a, b], vec![0.1, 0.1]));
        assert_eq!(m.min_distance, 1.0);
        assert_eq!(m.collision_frames, 0);
    }

    #[test]
    fn pass_through_between_frames_is_a_collision() {
        let a = vec![(0.0, 0.0), (1.0, 0.0)];
        let b = vec![(1.0, 0.0), (0.0, 0.0)];
        let m = metrics(&trace(vec![a, b], vec![0.1, 0.1]));
        assert_eq!(m.min_distance, 0.0);
        assert_eq!(m.collision_frames, 1);
    }

    #[test]
    fn segment_minimum() {
        assert_eq!(segment_min(Point2::new(-1.0, 0.5), Point2::new(1.0, 0.5)), 0.5);
        assert_eq!(segment_min(Point2::new(2.0, 0.0), Point2::new(3.0, 0.0)), 2.0);
        assert_eq!(segment_min(Point2::new(1.0, 0.0), Point2::new(1.0, 0.0)), 1.0);
    }

    #[test]
    fn overlap_counts_frames() {
        let a = vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)];
        let b = vec![(1.0, 0.0), (0.15, 0.0), (0.1, 0.0)];
        assert_eq!(metrics(&trace(vec![a, b], vec![0.1, 0.1])).collision_frames, 2);
    }
}
