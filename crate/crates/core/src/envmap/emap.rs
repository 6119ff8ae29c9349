//! Feature-node graph (E-Map) extracted from a skeleton.
//!
//! Pixels are linked by 4-adjacency, plus diagonal adjacency when neither of
//! the two cells shared by the diagonal pair is a skeleton pixel. This drops
//! the redundant diagonal shortcuts around 4-connected corners, so a pixel in
//! the middle of a thin arc always has exactly two links.
//!
//! Feature nodes are junctions (3+ links), endpoints (1 link), isolated
//! pixels, and corners: 2 links turning by more than 45 degrees. Touching
//! junction pixels merge into one node. Closed loops without a feature pixel,
//! self-loops and parallel arcs are split by inserting extra nodes on the arc,
//! so the result is a simple weighted graph.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::envmap::skeleton::{Skeleton, RING};
use crate::Point2;

#[derive(Clone, Debug, PartialEq)]
pub struct EMapNode {
    pub id: usize,
    /// `(col, row)` of the representative skeleton pixel.
    pub cell: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EMapEdge {
    pub a: usize,
    pub b: usize,
    /// Arc length in meters.
    pub weight: f64,
    /// Skeleton pixels strictly between the two nodes, ordered from `a` to `b`.
    pub cells: Vec<(usize, usize)>,
}

/// Where a skeleton pixel sits in the graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SkeletonLoc {
    Node(usize),
    /// Interior pixel `index` of `edge`, `from_a` meters along the arc.
    Edge { edge: usize, index: usize, from_a: f64 },
}

#[derive(Clone, Debug)]
pub struct EMapGraph {
    pub nodes: Vec<EMapNode>,
    pub edges: Vec<EMapEdge>,
    pub skeleton: Skeleton,
    adjacency: Vec<Vec<(usize, usize)>>,
    locator: Vec<Option<SkeletonLoc>>,
    members: Vec<Vec<(usize, usize)>>,
}

impl EMapGraph {
    pub fn resolution(&self) -> f64 {
        self.skeleton.resolution()
    }

    /// `(neighbour node, edge index)` pairs of `node`.
    pub fn neighbours(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn locate(&self, col: usize, row: usize) -> Option<SkeletonLoc> {
        self.locator[row * self.skeleton.width() + col]
    }

    /// Skeleton pixels merged into `node` (one unless it is a junction cluster).
    pub fn members(&self, node: usize) -> &[(usize, usize)] {
        &self.members[node]
    }

    pub fn node_position(&self, node: usize) -> Point2 {
        let (c, r) = self.nodes[node].cell;
        let res = self.resolution();
        Point2::new((c as f64 + 0.5) * res, (r as f64 + 0.5) * res)
    }

    /// Plain-text adjacency dump: `node_id col row` lines, then `a b weight`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let _ = writeln!(out, "{} {} {}", n.id, n.cell.0, n.cell.1);
        }
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:.9}", e.a, e.b, e.weight);
        }
        out
    }
}

/// Octile length of a lattice step sequence between two cells, in cells.
pub(crate) fn octile_cells(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

/// Linked neighbours of a skeleton pixel (see module docs).
pub(crate) fn links(s: &Skeleton, col: usize, row: usize) -> Vec<(usize, usize)> {
    let (c, r) = (col as i64, row as i64);
    RING.iter()
        .filter(|&&(dc, dr)| {
            s.get(c + dc, r + dr) && (dc == 0 || dr == 0 || (!s.get(c + dc, r) && !s.get(c, r + dr)))
        })
        .map(|&(dc, dr)| ((c + dc) as usize, (r + dr) as usize))
        .collect()
}

fn is_feature(s: &Skeleton, col: usize, row: usize) -> bool {
    let l = links(s, col, row);
    if l.len() != 2 {
        return true;
    }
    let (p, a, b) = ((col as f64, row as f64), l[0], l[1]);
    let u = (p.0 - a.0 as f64, p.1 - a.1 as f64);
    let v = (b.0 as f64 - p.0, b.1 as f64 - p.1);
    let cos = (u.0 * v.0 + u.1 * v.1) / ((u.0 * u.0 + u.1 * u.1).sqrt() * (v.0 * v.0 + v.1 * v.1).sqrt());
    cos < std::f64::consts::FRAC_1_SQRT_2 - 1e-9
}

struct Arc {
    a: usize,
    b: usize,
    start: (usize, usize),
    end: (usize, usize),
    cells: Vec<(usize, usize)>,
    length: f64,
}

/// Builds the E-Map of `skeleton`.
pub fn extract_feature_nodes(skeleton: &Skeleton) -> EMapGraph {
    let (w, h) = (skeleton.width(), skeleton.height());
    let mut node_pixel = vec![false; w * h];
    for (c, r) in skeleton.iter() {
        node_pixel[r * w + c] = is_feature(skeleton, c, r);
    }
    // loops with no feature pixel at all get their first pixel
    let (labels, count) = super::skeleton::label_components(w, h, skeleton.pixels());
    let mut has_node = vec![false; count];
    for i in 0..w * h {
        if node_pixel[i] {
            has_node[labels[i]] = true;
        }
    }
    for i in 0..w * h {
        if labels[i] != usize::MAX && !has_node[labels[i]] {
            has_node[labels[i]] = true;
            node_pixel[i] = true;
        }
    }

    loop {
        let (members, pixel_node) = cluster_nodes(skeleton, &node_pixel);
        let arcs = trace_arcs(skeleton, &members, &pixel_node);
        let splits = find_splits(&arcs);
        if splits.is_empty() {
            return assemble(skeleton, members, pixel_node, arcs);
        }
        for (c, r) in splits {
            node_pixel[r * w + c] = true;
        }
    }
}

/// Groups node pixels into nodes (adjacent junction pixels merge) and orders
/// them by representative pixel.
fn cluster_nodes(s: &Skeleton, node_pixel: &[bool]) -> (Vec<Vec<(usize, usize)>>, Vec<usize>) {
    let w = s.width();
    let junction = |c: usize, r: usize| links(s, c, r).len() >= 3;
    let mut pixel_node = vec![usize::MAX; node_pixel.len()];
    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    for i in 0..node_pixel.len() {
        if !node_pixel[i] || pixel_node[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut group = vec![(i % w, i / w)];
        pixel_node[i] = id;
        if junction(i % w, i / w) {
            let mut k = 0;
            while k < group.len() {
                let (c, r) = group[k];
                for (nc, nr) in links(s, c, r) {
                    let j = nr * w + nc;
                    if node_pixel[j] && pixel_node[j] == usize::MAX && junction(nc, nr) {
                        pixel_node[j] = id;
                        group.push((nc, nr));
                    }
                }
                k += 1;
            }
        }
        group.sort_by_key(|&(c, r)| (r, c));
        clusters.push(group);
    }
    let reps: Vec<(usize, usize)> = clusters.iter().map(|g| representative(g)).collect();
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&k| (reps[k].1, reps[k].0));
    let mut remap = vec![0; clusters.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    for p in pixel_node.iter_mut().filter(|p| **p != usize::MAX) {
        *p = remap[*p];
    }
    let mut sorted = vec![Vec::new(); clusters.len()];
    for (old, g) in clusters.into_iter().enumerate() {
        sorted[remap[old]] = g;
    }
    (sorted, pixel_node)
}

/// Member closest to the cluster centroid; first in row-major order on ties.
fn representative(group: &[(usize, usize)]) -> (usize, usize) {
    let n = group.len() as f64;
    let cx = group.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let cy = group.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let mut best = group[0];
    let mut best_d = f64::INFINITY;
    for &p in group {
        let d = (p.0 as f64 - cx).powi(2) + (p.1 as f64 - cy).powi(2);
        if d < best_d - 1e-12 {
            best_d = d;
            best = p;
        }
    }
    best
}

fn trace_arcs(s: &Skeleton, members: &[Vec<(usize, usize)>], pixel_node: &[usize]) -> Vec<Arc> {
    let w = s.width();
    let mut used = vec![false; pixel_node.len()];
    let mut direct = HashSet::new();
    let mut arcs = Vec::new();
    for (a, group) in members.iter().enumerate() {
        for &m in group {
            for q in links(s, m.0, m.1) {
                let qi = q.1 * w + q.0;
                if pixel_node[qi] == a {
                    continue;
                }
                if pixel_node[qi] != usize::MAX {
                    let key = if m < q { (m, q) } else { (q, m) };
                    if direct.insert(key) {
                        arcs.push(Arc { a, b: pixel_node[qi], start: m, end: q, cells: Vec::new(), length: octile_cells(m, q) });
                    }
                    continue;
                }
                if used[qi] {
                    continue;
                }
                let mut cells = vec![q];
                used[qi] = true;
                let mut length = octile_cells(m, q);
                let (mut prev, mut cur) = (m, q);
                let end = loop {
                    let next = links(s, cur.0, cur.1).into_iter().find(|&n| n != prev);
                    let Some(n) = next else { break None };
                    length += octile_cells(cur, n);
                    let ni = n.1 * w + n.0;
                    if pixel_node[ni] != usize::MAX {
                        break Some(n);
                    }
                    if used[ni] {
                        break None;
                    }
                    used[ni] = true;
                    cells.push(n);
                    prev = cur;
                    cur = n;
                };
                if let Some(end) = end {
                    arcs.push(Arc { a, b: pixel_node[end.1 * w + end.0], start: m, end, cells, length });
                }
            }
        }
    }
    arcs
}

/// Pixels to promote to nodes so that no self-loop or parallel arc remains.
fn find_splits(arcs: &[Arc]) -> Vec<(usize, usize)> {
    let mut splits = Vec::new();
    let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, arc) in arcs.iter().enumerate() {
        if arc.a == arc.b {
            let n = arc.cells.len();
            if n >= 2 {
                splits.push(arc.cells[n / 3]);
                splits.push(arc.cells[(2 * n) / 3]);
            } else if n == 1 {
                splits.push(arc.cells[0]);
            }
            continue;
        }
        by_pair.entry((arc.a.min(arc.b), arc.a.max(arc.b))).or_default().push(k);
    }
    for list in by_pair.values() {
        if list.len() < 2 {
            continue;
        }
        let shortest = *list
            .iter()
            .min_by(|&&x, &&y| arcs[x].length.total_cmp(&arcs[y].length).then(x.cmp(&y)))
            .unwrap();
        for &k in list {
            if k != shortest && !arcs[k].cells.is_empty() {
                splits.push(arcs[k].cells[arcs[k].cells.len() / 2]);
            }
        }
    }
    splits.sort_by_key(|&(c, r)| (r, c));
    splits.dedup();
    splits
}

fn assemble(
    s: &Skeleton,
    members: Vec<Vec<(usize, usize)>>,
    pixel_node: Vec<usize>,
    arcs: Vec<Arc>,
) -> EMapGraph {
    let (w, res) = (s.width(), s.resolution());
    let nodes: Vec<EMapNode> =
        members.iter().enumerate().map(|(id, g)| EMapNode { id, cell: representative(g) }).collect();
    let mut best: HashMap<(usize, usize), Arc> = HashMap::new();
    for arc in arcs {
        // orient every arc from the lower node id
        let arc = if arc.a > arc.b {
            let mut cells = arc.cells;
            cells.reverse();
            Arc { a: arc.b, b: arc.a, start: arc.end, end: arc.start, cells, length: arc.length }
        } else {
            arc
        };
        let key = (arc.a, arc.b);
        match best.get(&key) {
            Some(old) if old.length <= arc.length => {}
            _ => {
                best.insert(key, arc);
            }
        }
    }
    let mut arcs: Vec<Arc> = best.into_values().collect();
    arcs.sort_by_key(|a| (a.a, a.b));

    let mut locator: Vec<Option<SkeletonLoc>> = vec![None; w * s.height()];
    for (i, &n) in pixel_node.iter().enumerate() {
        if n != usize::MAX {
            locator[i] = Some(SkeletonLoc::Node(n));
        }
    }
    let mut adjacency = vec![Vec::new(); nodes.len()];
    let mut edges = Vec::with_capacity(arcs.len());
    for (k, arc) in arcs.into_iter().enumerate() {
        let lead = octile_cells(nodes[arc.a].cell, arc.start);
        let tail = octile_cells(arc.end, nodes[arc.b].cell);
        let mut along = lead;
        let mut prev = arc.start;
        for (index, &c) in arc.cells.iter().enumerate() {
            along += octile_cells(prev, c);
            prev = c;
            locator[c.1 * w + c.0] = Some(SkeletonLoc::Edge { edge: k, index, from_a: along * res });
        }
        adjacency[arc.a].push((arc.b, k));
        adjacency[arc.b].push((arc.a, k));
        edges.push(EMapEdge { a: arc.a, b: arc.b, weight: (lead + arc.length + tail) * res, cells: arc.cells });
    }
    EMapGraph { nodes, edges, skeleton: s.clone(), adjacency, locator, members }
}
