//! Shortest paths on the E-Map and line-of-sight shortcutting.

use std::collections::BinaryHeap;

use crate::envmap::emap::{octile_cells, EMapGraph, SkeletonLoc};
use crate::envmap::grid::OccupancyGrid;
use crate::envmap::skeleton::{HeapItem, RING};
use crate::{Error, Point2, Result};

/// Octile distance `max(dx, dy) + (sqrt(2) - 1) min(dx, dy)`.
pub fn octile(dx: f64, dy: f64) -> f64 {
    let (dx, dy) = (dx.abs(), dy.abs());
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodePath {
    pub nodes: Vec<usize>,
    /// Total weight in meters.
    pub cost: f64,
}

/// A* over an implicit graph. `cell` gives node lattice positions for the
/// heuristic; `expand` lists `(neighbour, weight)`. Stale heap entries are
/// skipped rather than closed, so nodes may be reopened.
pub(crate) fn astar(
    count: usize,
    resolution: f64,
    cell: impl Fn(usize) -> (usize, usize),
    mut expand: impl FnMut(usize, &mut Vec<(usize, f64)>),
    start: usize,
    goal: usize,
) -> Option<NodePath> {
    let goal_cell = cell(goal);
    let h = |n: usize| octile_cells(cell(n), goal_cell) * resolution;
    let mut g = vec![f64::INFINITY; count];
    let mut parent = vec![usize::MAX; count];
    let mut heap = BinaryHeap::new();
    g[start] = 0.0;
    heap.push(HeapItem { cost: h(start), index: start });
    let mut buf = Vec::new();
    while let Some(HeapItem { cost, index }) = heap.pop() {
        if cost - h(index) > g[index] + 1e-12 {
            continue;
        }
        if index == goal {
            let mut nodes = vec![goal];
            let mut n = goal;
            while parent[n] != usize::MAX {
                n = parent[n];
                nodes.push(n);
            }
            nodes.reverse();
            return Some(NodePath { nodes, cost: g[goal] });
        }
        buf.clear();
        expand(index, &mut buf);
        for &(next, w) in &buf {
            let ng = g[index] + w;
            if ng < g[next] {
                g[next] = ng;
                parent[next] = index;
                heap.push(HeapItem { cost: ng + h(next), index: next });
            }
        }
    }
    None
}

/// Minimum-weight node path between two E-Map nodes, `None` if disconnected.
pub fn astar_octile(emap: &EMapGraph, start: usize, end: usize) -> Result<Option<NodePath>> {
    let n = emap.nodes.len();
    if start >= n || end >= n {
        return Err(Error::input(format!("node {} not in E-Map of {n} nodes", start.max(end))));
    }
    Ok(astar(
        n,
        emap.resolution(),
        |k| emap.nodes[k].cell,
        |k, out| out.extend(emap.neighbours(k).iter().map(|&(m, e)| (m, emap.edges[e].weight))),
        start,
        end,
    ))
}

/// Route from a source to a destination through the E-Map.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxRoute {
    /// Feature nodes traversed, in order.
    pub nodes: Vec<usize>,
    /// World positions of `nodes`.
    pub points: Vec<Point2>,
    /// 8-connected cell chain from the source cell to the destination cell.
    pub cells: Vec<(usize, usize)>,
}

/// Geodesic walk from `from` to the closest skeleton pixel through free cells
/// of `feasible`. Returns the cell chain, ending on the skeleton.
fn snap(emap: &EMapGraph, feasible: &OccupancyGrid, from: (usize, usize)) -> Option<Vec<(usize, usize)>> {
    let (w, h) = (feasible.width(), feasible.height());
    let mut dist = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut heap = BinaryHeap::new();
    let s = from.1 * w + from.0;
    dist[s] = 0.0;
    heap.push(HeapItem { cost: 0.0, index: s });
    while let Some(HeapItem { cost, index }) = heap.pop() {
        if cost > dist[index] {
            continue;
        }
        let (c, r) = (index % w, index / w);
        if emap.skeleton.get(c as i64, r as i64) {
            let mut chain = vec![(c, r)];
            let mut i = index;
            while parent[i] != usize::MAX {
                i = parent[i];
                chain.push((i % w, i / w));
            }
            chain.reverse();
            return Some(chain);
        }
        for &(dc, dr) in &RING {
            let (nc, nr) = (c as i64 + dc, r as i64 + dr);
            if feasible.is_occupied_at(nc, nr) {
                continue;
            }
            let j = nr as usize * w + nc as usize;
            let nd = cost + if dc != 0 && dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            if nd < dist[j] {
                dist[j] = nd;
                parent[j] = index;
                heap.push(HeapItem { cost: nd, index: j });
            }
        }
    }
    None
}

/// Attachment of a snapped pixel to the graph.
#[derive(Clone, Copy)]
enum Anchor {
    Node(usize),
    Edge { edge: usize, index: usize, from_a: f64 },
}

/// Snaps `source` and `dest` onto the skeleton, searches the E-Map between
/// them and returns the traversed feature nodes plus a dense cell chain.
/// `None` if either end is blocked in `feasible` or no route exists.
pub fn find_aux_nodes(emap: &EMapGraph, feasible: &OccupancyGrid, source: Point2, dest: Point2) -> Option<AuxRoute> {
    let sc = feasible.cell_of(&source)?;
    let dc = feasible.cell_of(&dest)?;
    if feasible.is_occupied(sc.0, sc.1) || feasible.is_occupied(dc.0, dc.1) {
        return None;
    }
    let head = snap(emap, feasible, sc)?;
    let mut tail = snap(emap, feasible, dc)?;
    tail.reverse();
    let anchor = |p: (usize, usize)| match emap.locate(p.0, p.1)? {
        SkeletonLoc::Node(n) => Some(Anchor::Node(n)),
        SkeletonLoc::Edge { edge, index, from_a } => Some(Anchor::Edge { edge, index, from_a }),
    };
    let sa = anchor(*head.last()?)?;
    let da = anchor(tail[0])?;

    // graph nodes, then virtual source and destination
    let n = emap.nodes.len();
    let (vs, vd) = (n, n + 1);
    let res = emap.resolution();
    let mut extra: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 2];
    let attach = |v: usize, a: Anchor, pixel: (usize, usize), extra: &mut Vec<Vec<(usize, f64)>>| match a {
        Anchor::Node(k) => {
            // cluster members sit a little off the representative pixel
            let w = octile_cells(pixel, emap.nodes[k].cell) * res;
            extra[v].push((k, w));
            extra[k].push((v, w));
        }
        Anchor::Edge { edge, from_a, .. } => {
            let e = &emap.edges[edge];
            extra[v].push((e.a, from_a));
            extra[e.a].push((v, from_a));
            extra[v].push((e.b, e.weight - from_a));
            extra[e.b].push((v, e.weight - from_a));
        }
    };
    attach(vs, sa, *head.last()?, &mut extra);
    attach(vd, da, tail[0], &mut extra);
    if let (Anchor::Edge { edge: e1, from_a: f1, .. }, Anchor::Edge { edge: e2, from_a: f2, .. }) = (sa, da) {
        if e1 == e2 {
            extra[vs].push((vd, (f1 - f2).abs()));
            extra[vd].push((vs, (f1 - f2).abs()));
        }
    }
    let head_end = *head.last()?;
    let tail_start = tail[0];
    let cell = |k: usize| {
        if k == vs {
            head_end
        } else if k == vd {
            tail_start
        } else {
            emap.nodes[k].cell
        }
    };
    let path = astar(
        n + 2,
        res,
        cell,
        |k, out| {
            if k < n {
                out.extend(emap.neighbours(k).iter().map(|&(m, e)| (m, emap.edges[e].weight)));
            }
            out.extend_from_slice(&extra[k]);
        },
        vs,
        vd,
    )?;

    let mut cells = head;
    for pair in path.nodes.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let seg = segment_cells(emap, u, v, sa, da, vs);
        cells.extend(seg);
        cells.push(cell(v));
    }
    cells.extend(tail.into_iter().skip(1));
    cells.dedup();
    let nodes: Vec<usize> = path.nodes.iter().copied().filter(|&k| k < n).collect();
    let points = nodes.iter().map(|&k| emap.node_position(k)).collect();
    Some(AuxRoute { nodes, points, cells })
}

/// Interior skeleton pixels walked between consecutive route nodes.
fn segment_cells(
    emap: &EMapGraph,
    u: usize,
    v: usize,
    sa: Anchor,
    da: Anchor,
    vs: usize,
) -> Vec<(usize, usize)> {
    let n = emap.nodes.len();
    let anchor_of = |k: usize| if k == vs { sa } else { da };
    // position of an endpoint along edge `e`, as an index into the interior
    // list extended by the two nodes (-1 = node a, len = node b)
    let pos = |k: usize, e: usize| -> Option<i64> {
        let edge = &emap.edges[e];
        if k < n {
            return if k == edge.a {
                Some(-1)
            } else if k == edge.b {
                Some(edge.cells.len() as i64)
            } else {
                None
            };
        }
        match anchor_of(k) {
            Anchor::Edge { edge: ae, index, .. } if ae == e => Some(index as i64),
            _ => None,
        }
    };
    let pick = |e: usize| -> Vec<(usize, usize)> {
        let (Some(i), Some(j)) = (pos(u, e), pos(v, e)) else { return Vec::new() };
        let cells = &emap.edges[e].cells;
        let range: Vec<i64> = if i < j { (i + 1..j).collect() } else { (j + 1..i).rev().collect() };
        range.into_iter().map(|k| cells[k as usize]).collect()
    };
    if u < n && v < n {
        let e = emap.neighbours(u).iter().find(|&&(m, _)| m == v).map(|&(_, e)| e);
        return e.map(pick).unwrap_or_default();
    }
    for k in [u, v] {
        if k >= n {
            if let Anchor::Edge { edge, .. } = anchor_of(k) {
                return pick(edge);
            }
        }
    }
    Vec::new()
}

/// Cells visited by the Bresenham segment between two cells, both included.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// `true` if the rasterized segment between the cells of `a` and `b` crosses
/// no occupied cell. Points outside the map never see anything.
pub fn line_of_sight(grid: &OccupancyGrid, a: &Point2, b: &Point2) -> bool {
    let (Some(ca), Some(cb)) = (grid.cell_of(a), grid.cell_of(b)) else { return false };
    bresenham((ca.0 as i64, ca.1 as i64), (cb.0 as i64, cb.1 as i64))
        .into_iter()
        .all(|(c, r)| !grid.is_occupied_at(c, r))
}

/// Greedy shortcutting of `[source, aux..., dest]`: from each kept point jump
/// to the farthest later point in sight. If nothing is in sight the next point
/// is kept anyway.
pub fn reduce_nodes(aux: &[Point2], feasible: &OccupancyGrid, source: Point2, dest: Point2) -> Vec<Point2> {
    let mut all = Vec::with_capacity(aux.len() + 2);
    all.push(source);
    all.extend_from_slice(aux);
    all.push(dest);
    let mut out = vec![source];
    let mut i = 0;
    while i + 1 < all.len() {
        let j = (i + 1..all.len()).rev().find(|&j| line_of_sight(feasible, &all[i], &all[j])).unwrap_or(i + 1);
        out.push(all[j]);
        i = j;
    }
    out
}
