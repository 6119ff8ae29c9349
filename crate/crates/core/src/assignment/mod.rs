//! Qualification of agents for roles and group role assignment.

pub mod hungarian;

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::envmap::{InitialPath, RobotType};
use crate::fmt::sig;
use crate::gp::{optimize_role, DistanceField, PlanSettings, ProcessRole};
pub use crate::gp::convergence;
use crate::{Error, Point2, Result};
pub use hungarian::hungarian;

/// `m x n` matrix of qualification values (`+inf` for infeasible pairs) with
/// the optimized trajectory behind every finite entry.
#[derive(Clone, Debug)]
pub struct QualificationMatrix {
    pub m: usize,
    pub n: usize,
    pub q: Vec<f64>,
    pub roles: Vec<Option<ProcessRole>>,
    /// LM iterations spent per pair.
    pub iterations: Vec<Option<usize>>,
}

impl QualificationMatrix {
    pub fn from_costs(m: usize, n: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != m * n {
            return Err(Error::input(format!("expected {} costs, got {}", m * n, q.len())));
        }
        if q.iter().any(|&v| v.is_nan() || v < 0.0 || v == f64::NEG_INFINITY) {
            return Err(Error::input("qualification values must be non-negative or +inf"));
        }
        Ok(Self { m, n, roles: vec![None; m * n], iterations: vec![None; m * n], q })
    }

    #[inline]
    pub fn get(&self, agent: usize, role: usize) -> f64 {
        self.q[agent * self.n + role]
    }

    pub fn role(&self, agent: usize, role: usize) -> Option<&ProcessRole> {
        self.roles[agent * self.n + role].as_ref()
    }

    /// CSV with header `agent_id,role_<id>...` and one row per agent; `inf`
    /// marks infeasible entries.
    pub fn to_csv(&self, agent_ids: &[usize], role_ids: &[usize]) -> String {
        let header: Vec<String> = role_ids.iter().map(|r| format!("role_{r}")).collect();
        let mut out = format!("agent_id,{}\n", header.join(","));
        for a in 0..self.m {
            let row: Vec<String> = (0..self.n).map(|r| sig(self.get(a, r), 9)).collect();
            let _ = writeln!(out, "{},{}", agent_ids[a], row.join(","));
        }
        out
    }
}

/// Agent-role pairs of a matching, sorted by agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn t_r(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn t_c(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn role_of(&self, agent: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == agent).map(|p| p.1)
    }

    /// Sum of `q` over the pairs (agent order).
    pub fn cost_under(&self, q: &QualificationMatrix) -> f64 {
        self.pairs.iter().map(|&(a, r)| q.get(a, r)).sum()
    }

    /// CSV `agent_id,role_id,cost`, translating indices to ids.
    pub fn to_csv(&self, q: &QualificationMatrix, agent_ids: &[usize], role_ids: &[usize]) -> String {
        let mut out = String::from("agent_id,role_id,cost\n");
        for &(a, r) in &self.pairs {
            let _ = writeln!(out, "{},{},{}", agent_ids[a], role_ids[r], sig(q.get(a, r), 9));
        }
        out
    }
}

/// Optimizes every feasible (agent, role) pair from its initial path and
/// fills the qualification matrix. Pairs without an initial path, and pairs
/// whose solve fails, get `+inf`. Pairs run in parallel.
pub fn evaluate_qualifications(
    robots: &[RobotType],
    fields: &[&(dyn DistanceField + Sync)],
    init_paths: &[Vec<Option<InitialPath>>],
    settings: &PlanSettings,
) -> Result<QualificationMatrix> {
    settings.validate()?;
    let m = init_paths.len();
    let n = init_paths.first().map_or(0, Vec::len);
    if robots.len() != m || fields.len() != m || init_paths.iter().any(|row| row.len() != n) {
        return Err(Error::input("qualification inputs disagree on the agent/role counts"));
    }
    let results: Vec<(f64, Option<ProcessRole>, Option<usize>)> = (0..m * n)
        .into_par_iter()
        .map(|idx| {
            let (a, r) = (idx / n, idx % n);
            let Some(path) = &init_paths[a][r] else {
                return (f64::INFINITY, None, None);
            };
            match optimize_role(path.agent_id, path.role_id, &path.states, &robots[a], fields[a], settings) {
                Ok((role, report)) if role.cost.is_finite() => (role.cost, Some(role), Some(report.iterations)),
                Ok((role, _)) => {
                    log::warn!("agent {a} role {r}: qualification value {} treated as infeasible", role.cost);
                    (f64::INFINITY, None, None)
                }
                Err(e) => {
                    log::warn!("agent {a} role {r}: {e}; pair marked infeasible");
                    (f64::INFINITY, None, None)
                }
            }
        })
        .collect();
    let mut qm = QualificationMatrix::from_costs(m, n, results.iter().map(|r| r.0).collect())?;
    for (idx, (_, role, it)) in results.into_iter().enumerate() {
        qm.roles[idx] = role;
        qm.iterations[idx] = it;
    }
    Ok(qm)
}

/// Cost matrix with `+inf` replaced by a sentinel above every finite matching.
fn with_sentinel(q: &QualificationMatrix) -> (Vec<f64>, f64) {
    let finite: f64 = q.q.iter().filter(|v| v.is_finite()).sum();
    let big = 1.0 + 2.0 * finite;
    (q.q.iter().map(|&v| if v.is_finite() { v } else { big }).collect(), big)
}

/// Optimal matching over the agents in `agents` and roles in `roles`
/// (`roles.len() <= agents.len()`); `None` if it needs a sentinel entry.
fn best_subproblem(cost: &[f64], n: usize, big: f64, agents: &[usize], roles: &[usize]) -> Option<f64> {
    if roles.len() > agents.len() {
        return None;
    }
    // roles are rows so the rectangular case needs no padding
    let sub: Vec<f64> = roles.iter().flat_map(|&r| agents.iter().map(move |&a| cost[a * n + r])).collect();
    let sol = hungarian(&sub, roles.len(), agents.len());
    let mut total = 0.0;
    for (i, &j) in sol.iter().enumerate() {
        let c = sub[i * agents.len() + j];
        if c >= big {
            return None;
        }
        total += c;
    }
    Some(total)
}

/// Largest role count solved by the exact subset recursion.
const EXACT_MAX_ROLES: usize = 10;

/// Minimum over completions of `prefix` by agents `a..` of the agent-order
/// left-fold cost, covering the roles missing from `mask`. Floating-point
/// addition is monotone, so keeping the smallest prefix per role subset is
/// exact.
fn best_completion(cost: &[f64], m: usize, n: usize, a: usize, mask: usize, prefix: f64) -> Option<f64> {
    let full = (1usize << n) - 1;
    let mut cur = vec![f64::INFINITY; 1 << n];
    cur[mask] = prefix;
    for agent in a..m {
        let mut next = cur.clone();
        for (s, &v) in cur.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            for r in 0..n {
                let c = cost[agent * n + r];
                if s & (1 << r) == 0 && c.is_finite() {
                    let t = s | (1 << r);
                    let w = v + c;
                    if w < next[t] {
                        next[t] = w;
                    }
                }
            }
        }
        cur = next;
    }
    cur[full].is_finite().then_some(cur[full])
}

fn no_matching(q: &QualificationMatrix) -> Error {
    let dead: Vec<String> =
        (0..q.n).filter(|&r| (0..q.m).all(|a| !q.get(a, r).is_finite())).map(|r| r.to_string()).collect();
    if dead.is_empty() {
        Error::Infeasible("no finite matching covers every role".into())
    } else {
        Error::Infeasible(format!("no agent can reach role(s) {}", dead.join(", ")))
    }
}

/// Fixes agents in order, each to the smallest open role (or to none) for
/// which `reaches(agent, roles_left, fixed_cost)` says the optimum stays
/// attainable.
fn refine(
    q: &QualificationMatrix,
    mut reaches: impl FnMut(usize, &[usize], f64) -> bool,
) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    let mut fixed = 0.0;
    let mut open: Vec<usize> = (0..q.n).collect();
    for a in 0..q.m {
        let mut chosen = false;
        for i in 0..open.len() {
            let r = open[i];
            let c = q.get(a, r);
            if !c.is_finite() {
                continue;
            }
            let mut rest = open.clone();
            rest.remove(i);
            if reaches(a, &rest, fixed + c) {
                pairs.push((a, r));
                fixed += c;
                open.remove(i);
                chosen = true;
                break;
            }
        }
        if !chosen && !reaches(a, &open, fixed) {
            return Err(Error::Infeasible("assignment refinement lost feasibility".into()));
        }
    }
    Ok(pairs)
}

/// Minimum-cost matching covering every role (group role assignment).
/// Among optimal matchings the lexicographically smallest `(t_r, t_c)` wins.
///
/// Up to ten roles the optimum is exact in floating point (subset
/// recursion over the agent-order sum); larger instances use the Hungarian
/// algorithm with a relative tie tolerance.
pub fn gra_solve(q: &QualificationMatrix) -> Result<Assignment> {
    let (m, n) = (q.m, q.n);
    if m < n {
        return Err(Error::Infeasible(format!("{m} agents cannot cover {n} roles")));
    }
    let pairs = if n <= EXACT_MAX_ROLES {
        let optimum = best_completion(&q.q, m, n, 0, 0, 0.0).ok_or_else(|| no_matching(q))?;
        refine(q, |a, open, prefix| {
            let mask = (0..n).filter(|r| !open.contains(r)).fold(0usize, |s, r| s | (1 << r));
            best_completion(&q.q, m, n, a + 1, mask, prefix) == Some(optimum)
        })?
    } else {
        let (cost, big) = with_sentinel(q);
        let all_agents: Vec<usize> = (0..m).collect();
        let all_roles: Vec<usize> = (0..n).collect();
        let optimum = best_subproblem(&cost, n, big, &all_agents, &all_roles).ok_or_else(|| no_matching(q))?;
        let scale: f64 = q.q.iter().filter(|v| v.is_finite()).map(|v| v.abs()).sum();
        let tol = 1e-12 * scale;
        refine(q, |a, open, fixed| {
            let rest: Vec<usize> = (a + 1..m).collect();
            best_subproblem(&cost, n, big, &rest, open).is_some_and(|sub| (fixed + sub - optimum).abs() <= tol)
        })?
    };
    let total_cost = pairs.iter().map(|&(a, r)| q.get(a, r)).sum();
    Ok(Assignment { pairs, total_cost })
}

/// Nearest-neighbour baseline: repeatedly match the globally closest
/// unmatched (agent, role) pair. `total_cost` is the summed distance.
pub fn nn_assign(agent_positions: &[Point2], role_positions: &[Point2]) -> Result<Assignment> {
    let (m, n) = (agent_positions.len(), role_positions.len());
    if m < n {
        return Err(Error::Infeasible(format!("{m} agents cannot cover {n} roles")));
    }
    let mut candidates: Vec<(f64, usize, usize)> = (0..m)
        .flat_map(|a| (0..n).map(move |r| (a, r)))
        .map(|(a, r)| ((agent_positions[a] - role_positions[r]).norm(), a, r))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut agent_used = vec![false; m];
    let mut role_used = vec![false; n];
    let mut pairs = Vec::with_capacity(n);
    let mut total_cost = 0.0;
    for (d, a, r) in candidates {
        if agent_used[a] || role_used[r] {
            continue;
        }
        agent_used[a] = true;
        role_used[r] = true;
        pairs.push((a, r));
        total_cost += d;
        if pairs.len() == n {
            break;
        }
    }
    pairs.sort();
    Ok(Assignment { pairs, total_cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qm(m: usize, n: usize, q: &[f64]) -> QualificationMatrix {
        QualificationMatrix::from_costs(m, n, q.to_vec()).unwrap()
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = gra_solve(&qm(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost, 2.0);
    }

    #[test]
    fn infinite_row_is_infeasible() {
        let inf = f64::INFINITY;
        assert!(matches!(gra_solve(&qm(2, 2, &[inf, inf, 1.0, 2.0])), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let a = gra_solve(&qm(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        // more agents than roles: lower agents are preferred on ties
        let a = gra_solve(&qm(3, 1, &[2.0, 2.0, 2.0])).unwrap();
        assert_eq!(a.pairs, vec![(0, 0)]);
    }

    #[test]
    fn extra_agents_stay_idle() {
        let a = gra_solve(&qm(3, 2, &[5.0, 5.0, 1.0, 9.0, 9.0, 1.0])).unwrap();
        assert_eq!(a.pairs, vec![(1, 0), (2, 1)]);
        assert_eq!(a.total_cost, 2.0);
    }

    #[test]
    fn nn_by_distance() {
        let agents = [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)];
        let roles = [Point2::new(1.0, 0.0), Point2::new(9.0, 0.0)];
        let a = nn_assign(&agents, &roles).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        let single = nn_assign(&agents[..1], &roles[..1]).unwrap();
        assert_eq!(single.pairs, vec![(0, 0)]);
    }

    #[test]
    fn q_csv_uses_inf() {
        let q = qm(1, 2, &[0.5, f64::INFINITY]);
        assert_eq!(q.to_csv(&[4], &[7, 9]), "agent_id,role_7,role_9\n4,0.5,inf\n");
    }
}
