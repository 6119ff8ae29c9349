//! Independent oracles shared by the integration tests and the acceptance
//! suite.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use role_engine::envmap::*;
use role_engine::gp::*;
use role_engine::{Point2, State};

/// Bounded-world signed distance by exhaustive search: free cells measure
/// to the nearest occupied cell or the ring just outside the map; occupied
/// cells measure `res - distance to the nearest free cell`.
pub fn brute_sdf(grid: &OccupancyGrid) -> Vec<f64> {
    let (w, h, res) = (grid.width() as i64, grid.height() as i64, grid.resolution());
    let any_free = grid.free_count() > 0;
    let mut out = Vec::with_capacity((w * h) as usize);
    for r in 0..h {
        for c in 0..w {
            let occupied = grid.is_occupied(c as usize, r as usize);
            let mut best = f64::INFINITY;
            for rr in -1..=h {
                for cc in -1..=w {
                    let inside = (0..w).contains(&cc) && (0..h).contains(&rr);
                    let target = if occupied {
                        inside && !grid.is_occupied(cc as usize, rr as usize)
                    } else {
                        !inside || grid.is_occupied(cc as usize, rr as usize)
                    };
                    if target {
                        best = best.min((((cc - c).pow(2) + (rr - r).pow(2)) as f64).sqrt());
                    }
                }
            }
            out.push(match (occupied, any_free) {
                (false, _) => best * res,
                (true, true) => res - best * res,
                (true, false) => -((w + h) as f64) * res,
            });
        }
    }
    out
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> OccupancyGrid {
    let cells = (0..w * h).map(|_| rng.random_bool(density)).collect();
    OccupancyGrid::from_cells(w, h, 0.05, cells).unwrap()
}

#[derive(PartialEq)]
pub struct Item(pub f64, pub usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap().then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dijkstra(emap: &EMapGraph, start: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; emap.nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Item(0.0, start));
    while let Some(Item(d, n)) = heap.pop() {
        if d > dist[n] {
            continue;
        }
        for &(m, e) in emap.neighbours(n) {
            let nd = d + emap.edges[e].weight;
            if nd < dist[m] {
                dist[m] = nd;
                heap.push(Item(nd, m));
            }
        }
    }
    dist
}

pub fn random_emap(rng: &mut ChaCha8Rng) -> EMapGraph {
    let mut grid = OccupancyGrid::new(48, 48, 0.05).unwrap();
    for _ in 0..rng.random_range(3..9) {
        let (x, y) = (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0));
        let (w, h) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
        grid.fill_rect(Point2::new(x, y), Point2::new(x + w, y + h), true);
    }
    extract_feature_nodes(&destair(&skeletonize(&grid)))
}

/// Two circular obstacles with exact distance and gradient.
pub struct Circles;

pub const CENTERS: [(f64, f64, f64); 2] = [(1.0, 1.0, 0.3), (2.2, 0.8, 0.25)];

impl DistanceField for Circles {
    fn distance(&self, p: &Point2, _step: usize) -> (f64, Point2) {
        CENTERS
            .iter()
            .map(|&(x, y, r)| {
                let d = p - Point2::new(x, y);
                let n = d.norm();
                (n - r, d / n)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
    }
}

pub fn random_state(rng: &mut ChaCha8Rng) -> State {
    State::new(rng.random_range(0.3..3.0), rng.random_range(0.2..1.8), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn block(f: &Factor, states: &[State], prior: &GpPrior) -> LinearFactor {
    linearize(std::slice::from_ref(f), states, prior, Some(&Circles)).unwrap().blocks.remove(0)
}

/// Central differences of the weighted residual over the touched states.
pub fn fd_jacobian(f: &Factor, states: &[State], prior: &GpPrior) -> DMatrix<f64> {
    let base = block(f, states, prior);
    let cols = if base.binary { 8 } else { 4 };
    let h = 1e-6;
    let mut jac = DMatrix::zeros(base.rows, cols);
    for j in 0..cols {
        let (s, c) = (base.k + j / 4, j % 4);
        let mut plus = states.to_vec();
        let mut minus = states.to_vec();
        plus[s][c] += h;
        minus[s][c] -= h;
        let (rp, rm) = (block(f, &plus, prior).residual, block(f, &minus, prior).residual);
        for i in 0..base.rows {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Keeps random points away from hinge and speed-limit kinks, where the
/// residual is not differentiable.
pub fn smooth_at(f: &Factor, states: &[State]) -> bool {
    match *f {
        Factor::Obstacle { k, radius, epsilon, .. } => {
            let (d, _) = Circles.distance(&Point2::new(states[k][0], states[k][1]), 0);
            (d - radius - epsilon).abs() > 1e-3
        }
        Factor::VelocityLimit { k, v_max, .. } => (Point2::new(states[k][2], states[k][3]).norm() - v_max).abs() > 1e-3,
        Factor::PairwiseConflict { k, other, radii, epsilon, .. } => {
            let d = (Point2::new(states[k][0], states[k][1]) - other).norm();
            (d - radii - epsilon).abs() > 1e-3 && d > 1e-3
        }
        _ => true,
    }
}

pub fn robot() -> RobotType {
    RobotType { type_id: "r".into(), radius: 0.1, v_max: 0.8, sigma_obs: 0.1, epsilon_safe: 0.1 }
}

pub fn straight(a: Point2, b: Point2, n: usize, total: f64) -> Vec<State> {
    let v = (b - a) / total;
    (0..=n)
        .map(|k| {
            let p = a + (b - a) * (k as f64 / n as f64);
            State::new(p.x, p.y, v.x, v.y)
        })
        .collect()
}

/// Minimum over every injective role map of the agent-order sum, with the
/// lexicographically smallest `(agents, roles)` pair list among optima.
pub fn brute_force(q: &[f64], m: usize, n: usize) -> Option<(f64, Vec<(usize, usize)>)> {
    fn rec(
        q: &[f64],
        m: usize,
        n: usize,
        a: usize,
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        best: &mut Option<(f64, Vec<(usize, usize)>)>,
    ) {
        let left = n - pairs.len();
        if m - a < left {
            return;
        }
        if a == m {
            let cost: f64 = pairs.iter().map(|&(i, j)| q[i * n + j]).sum();
            if cost.is_finite() && best.as_ref().is_none_or(|(b, _)| cost < *b) {
                *best = Some((cost, pairs.clone()));
            }
            return;
        }
        for r in 0..n {
            if !used[r] && q[a * n + r].is_finite() {
                used[r] = true;
                pairs.push((a, r));
                rec(q, m, n, a + 1, used, pairs, best);
                pairs.pop();
                used[r] = false;
            }
        }
        rec(q, m, n, a + 1, used, pairs, best);
    }
    let mut best = None;
    rec(q, m, n, 0, &mut vec![false; n], &mut Vec::new(), &mut best);
    best
}

pub fn matrix(m: usize, n: usize, seed: u64, inf_p: f64, levels: Option<u32>) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m * n)
        .map(|_| {
            if rng.random_bool(inf_p) {
                f64::INFINITY
            } else if let Some(l) = levels {
                rng.random_range(0..l) as f64
            } else {
                rng.random_range(0.0..10.0)
            }
        })
        .collect()
}


/// Largest |analytic - central difference| Jacobian entry over `points`
/// random smooth points of every factor kind.
pub fn max_jacobian_error(points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = GpPrior::new(Matrix2::new(1.0, 0.2, 0.2, 0.5), 0.4).unwrap();
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let states = vec![random_state(&mut rng), random_state(&mut rng)];
        let target = random_state(&mut rng);
        let factors = [
            Factor::GpPrior { k: 0 },
            Factor::Obstacle { k: 1, step: 0, radius: 0.1, epsilon: 0.6, sigma: 0.1 },
            Factor::FixState { k: 0, target, mask: FixMask::Full, sigma: 0.01 },
            Factor::FixState { k: 1, target, mask: FixMask::Position, sigma: 0.01 },
            Factor::VelocityLimit { k: 1, v_max: 0.6, sigma: 0.05 },
            Factor::PairwiseConflict {
                k: 0,
                other: Point2::new(states[0][0] + 0.1, states[0][1] - 0.05),
                radii: 0.1,
                epsilon: 0.1,
                sigma: 0.05,
            },
        ];
        if !factors.iter().all(|f| smooth_at(f, &states)) {
            continue;
        }
        for f in &factors {
            let lin = block(f, &states, &prior);
            let fd = fd_jacobian(f, &states, &prior);
            for i in 0..lin.rows {
                for j in 0..fd.ncols() {
                    worst = worst.max((lin.jac[(i, j)] - fd[(i, j)]).abs());
                }
            }
        }
        done += 1;
    }
    worst
}
