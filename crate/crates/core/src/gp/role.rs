//! Process roles: the trajectory an agent commits to for one role.

use std::fmt::Write as _;

use crate::fmt::sig;
use crate::{Error, Point2, Result, State};

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessRole {
    pub agent_id: usize,
    pub role_id: usize,
    /// `N + 1` support states `[x, y, vx, vy]`.
    pub states: Vec<State>,
    /// Seconds between supports.
    pub dt: f64,
    /// Latest qualification value of this trajectory.
    pub cost: f64,
    /// Global step index of `states[0]`.
    pub start_step: usize,
}

impl ProcessRole {
    pub fn new(agent_id: usize, role_id: usize, states: Vec<State>, dt: f64) -> Result<Self> {
        let role = Self { agent_id, role_id, states, dt, cost: 0.0, start_step: 0 };
        role.validate()?;
        Ok(role)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() < 2 {
            return Err(Error::input("a process role needs at least two support states"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::input(format!("dt must be positive, got {}", self.dt)));
        }
        if self.states.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::input("non-finite support state"));
        }
        Ok(())
    }

    /// Number of intervals `N`.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn position(&self, k: usize) -> Point2 {
        let s = &self.states[k];
        Point2::new(s[0], s[1])
    }

    pub fn velocity(&self, k: usize) -> Point2 {
        let s = &self.states[k];
        Point2::new(s[2], s[3])
    }

    /// Position at global step `step`, holding the first/last state outside
    /// the covered window.
    pub fn position_at_step(&self, step: usize) -> Point2 {
        let k = step.saturating_sub(self.start_step).min(self.steps());
        self.position(k)
    }

    pub fn positions(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.states.len()).map(|k| self.position(k))
    }
}

/// Trajectory CSV (`agent_id,k,t,x,y,vx,vy`), 9 significant digits.
pub fn trajectory_csv<'a>(roles: impl IntoIterator<Item = &'a ProcessRole>) -> String {
    let mut out = String::from("agent_id,k,t,x,y,vx,vy\n");
    for role in roles {
        for (i, s) in role.states.iter().enumerate() {
            let k = role.start_step + i;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                role.agent_id,
                k,
                sig(k as f64 * role.dt, 9),
                sig(s[0], 9),
                sig(s[1], 9),
                sig(s[2], 9),
                sig(s[3], 9)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ProcessRole::new(0, 0, vec![State::zeros()], 0.1).is_err());
        assert!(ProcessRole::new(0, 0, vec![State::zeros(); 3], 0.0).is_err());
        assert!(ProcessRole::new(0, 0, vec![State::zeros(), State::new(f64::NAN, 0.0, 0.0, 0.0)], 0.1).is_err());
        assert!(ProcessRole::new(0, 0, vec![State::zeros(); 3], 0.1).is_ok());
    }

    #[test]
    fn csv_rows() {
        let r = ProcessRole::new(2, 1, vec![State::new(0.0, 1.0, 0.5, 0.0), State::new(0.05, 1.0, 0.5, 0.0)], 0.1).unwrap();
        assert_eq!(trajectory_csv([&r]), "agent_id,k,t,x,y,vx,vy\n2,0,0,0,1,0.5,0\n2,1,0.1,0.05,1,0.5,0\n");
    }

    #[test]
    fn step_lookup_clamps() {
        let mut r = ProcessRole::new(0, 0, vec![State::zeros(), State::new(1.0, 0.0, 0.0, 0.0)], 1.0).unwrap();
        r.start_step = 5;
        assert_eq!(r.position_at_step(0), Point2::zeros());
        assert_eq!(r.position_at_step(6), Point2::new(1.0, 0.0));
        assert_eq!(r.position_at_step(60), Point2::new(1.0, 0.0));
    }
}
