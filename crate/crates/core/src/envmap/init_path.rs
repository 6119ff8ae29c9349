//! Initial support-state sequences along a waypoint polyline.

use crate::{Error, Point2, Result, State};

/// Waypoint polyline and the support states sampled from it.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialPath {
    pub agent_id: usize,
    pub role_id: usize,
    pub waypoints: Vec<Point2>,
    pub states: Vec<State>,
}

/// Point at arc length `s` along `points` (clamped to the ends).
fn point_at(points: &[Point2], cumulative: &[f64], s: f64) -> Point2 {
    let k = cumulative.partition_point(|&c| c <= s).clamp(1, points.len() - 1);
    let seg = cumulative[k] - cumulative[k - 1];
    if seg <= 0.0 {
        return points[k];
    }
    let t = ((s - cumulative[k - 1]) / seg).clamp(0.0, 1.0);
    points[k - 1] + (points[k] - points[k - 1]) * t
}

/// Places `n + 1` states at equal arc-length spacing along `waypoints` and
/// sets velocities by finite differences over `dt = total_time / n`
/// (central inside, one-sided at the ends).
pub fn make_init_path(waypoints: &[Point2], n: usize, total_time: f64) -> Result<Vec<State>> {
    if waypoints.is_empty() {
        return Err(Error::input("initial path needs at least one waypoint"));
    }
    if n == 0 {
        return Err(Error::input("step count N must be at least 1"));
    }
    if !(total_time > 0.0) {
        return Err(Error::input(format!("total time must be positive, got {total_time}")));
    }
    let mut cumulative = vec![0.0];
    for w in waypoints.windows(2) {
        cumulative.push(cumulative.last().unwrap() + (w[1] - w[0]).norm());
    }
    let length = *cumulative.last().unwrap();
    let positions: Vec<Point2> = if waypoints.len() == 1 || length <= 0.0 {
        vec![waypoints[0]; n + 1]
    } else {
        (0..=n)
            .map(|k| match k {
                0 => waypoints[0],
                k if k == n => *waypoints.last().unwrap(),
                k => point_at(waypoints, &cumulative, length * k as f64 / n as f64),
            })
            .collect()
    };
    let dt = total_time / n as f64;
    Ok((0..=n)
        .map(|k| {
            let v = if k == 0 {
                (positions[1] - positions[0]) / dt
            } else if k == n {
                (positions[n] - positions[n - 1]) / dt
            } else {
                (positions[k + 1] - positions[k - 1]) / (2.0 * dt)
            };
            State::new(positions[k].x, positions[k].y, v.x, v.y)
        })
        .collect())
}
