//! Skeletonization of free space and staircase removal.
//!
//! Thinning is the two-subiteration Zhang-Suen scheme run on free cells, with
//! everything outside the map treated as background. Zhang-Suen can erase
//! 2x2 blobs and thin diagonal necks down to nothing, so three repair passes
//! follow it:
//!
//! 1. every free component left without a skeleton pixel receives its most
//!    interior cell,
//! 2. skeleton pieces that ended up disconnected inside one free component
//!    are rejoined along a shortest free-space path,
//! 3. surviving 2x2 skeleton blocks lose a simple (topology-preserving) pixel.

use std::collections::{BinaryHeap, VecDeque};

use crate::envmap::grid::OccupancyGrid;
use crate::envmap::sdf::squared_distance_transform;

/// Neighbour offsets in ring order N, NE, E, SE, S, SW, W, NW (row grows down).
pub(crate) const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// One-pixel-wide binary skeleton living on the same lattice as its grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    width: usize,
    height: usize,
    resolution: f64,
    pixels: Vec<bool>,
}

impl Skeleton {
    pub fn new(width: usize, height: usize, resolution: f64, pixels: Vec<bool>) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self { width, height, resolution, pixels }
    }

    /// Skeleton from an ASCII picture: `#` is a skeleton pixel.
    pub fn from_ascii(rows: &[&str], resolution: f64) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let pixels = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        Self::new(width, height, resolution, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    #[inline]
    pub fn get(&self, col: i64, row: i64) -> bool {
        col >= 0
            && row >= 0
            && (col as usize) < self.width
            && (row as usize) < self.height
            && self.pixels[row as usize * self.width + col as usize]
    }

    pub(crate) fn set(&mut self, col: usize, row: usize, on: bool) {
        self.pixels[row * self.width + col] = on;
    }

    /// Skeleton pixels adjacent (8-connectivity) to `(col, row)`.
    pub fn neighbours(&self, col: usize, row: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        RING.iter().filter_map(move |&(dc, dr)| {
            let (c, r) = (col as i64 + dc, row as i64 + dr);
            self.get(c, r).then_some((c as usize, r as usize))
        })
    }

    pub fn neighbour_count(&self, col: usize, row: usize) -> usize {
        self.neighbours(col, row).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// `true` if some 2x2 window is entirely skeleton.
    pub fn has_square_block(&self) -> bool {
        (0..self.height.saturating_sub(1)).any(|r| {
            (0..self.width.saturating_sub(1)).any(|c| {
                let (c, r) = (c as i64, r as i64);
                self.get(c, r) && self.get(c + 1, r) && self.get(c, r + 1) && self.get(c + 1, r + 1)
            })
        })
    }

    fn ring(&self, col: usize, row: usize) -> [bool; 8] {
        let mut out = [false; 8];
        for (k, &(dc, dr)) in RING.iter().enumerate() {
            out[k] = self.get(col as i64 + dc, row as i64 + dr);
        }
        out
    }

    /// Removing a simple pixel changes neither the number of 8-connected
    /// skeleton pieces nor the 4-connected background around it.
    pub fn is_simple(&self, col: usize, row: usize) -> bool {
        is_simple_ring(&self.ring(col, row))
    }
}

/// Simple-point test on the 8-neighbourhood (8-connected foreground,
/// 4-connected background).
pub(crate) fn is_simple_ring(ring: &[bool; 8]) -> bool {
    // foreground: ring-consecutive cells are 8-adjacent; edge cells two apart
    // (N-E, E-S, ...) are diagonal neighbours of each other as well
    let mut parent = [0usize, 1, 2, 3, 4, 5, 6, 7];
    fn find(p: &mut [usize; 8], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let union = |p: &mut [usize; 8], a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra] = rb;
        }
    };
    for k in 0..8 {
        let next = (k + 1) % 8;
        if ring[k] && ring[next] {
            union(&mut parent, k, next);
        }
        if k % 2 == 0 {
            let skip = (k + 2) % 8;
            if ring[k] && ring[skip] {
                union(&mut parent, k, skip);
            }
        }
    }
    let mut roots = [false; 8];
    let mut fg = 0;
    for k in 0..8 {
        if ring[k] {
            let r = find(&mut parent, k);
            if !roots[r] {
                roots[r] = true;
                fg += 1;
            }
        }
    }
    if fg != 1 {
        return false;
    }
    // background: ring-consecutive cells are 4-adjacent; only components that
    // touch an edge neighbour of the centre count
    let mut bg = 0;
    let mut seen = [false; 8];
    for start in 0..8 {
        if ring[start] || seen[start] {
            continue;
        }
        let mut touches = false;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            touches |= k % 2 == 0;
            for n in [(k + 1) % 8, (k + 7) % 8] {
                if !ring[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if touches {
            bg += 1;
        }
    }
    bg == 1
}

/// Labels 8-connected components of `mask`; returns per-cell label (or
/// `usize::MAX`) and the component count.
pub(crate) fn label_components(width: usize, height: usize, mask: &[bool]) -> (Vec<usize>, usize) {
    let mut labels = vec![usize::MAX; width * height];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != usize::MAX {
            continue;
        }
        labels[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (c, r) = ((i % width) as i64, (i / width) as i64);
            for &(dc, dr) in &RING {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 0 || nr < 0 || nc >= width as i64 || nr >= height as i64 {
                    continue;
                }
                let j = nr as usize * width + nc as usize;
                if mask[j] && labels[j] == usize::MAX {
                    labels[j] = count;
                    queue.push_back(j);
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

fn zhang_suen(width: usize, height: usize, fg: &mut [bool]) {
    let at = |fg: &[bool], c: i64, r: i64| -> u8 {
        if c < 0 || r < 0 || c >= width as i64 || r >= height as i64 {
            0
        } else {
            fg[r as usize * width + c as usize] as u8
        }
    };
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for r in 0..height {
                for c in 0..width {
                    if !fg[r * width + c] {
                        continue;
                    }
                    let (ci, ri) = (c as i64, r as i64);
                    let p: [u8; 8] = std::array::from_fn(|k| at(fg, ci + RING[k].0, ri + RING[k].1));
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&k| p[k] == 0 && p[(k + 1) % 8] == 1).count();
                    if a != 1 {
                        continue;
                    }
                    // P2=N P4=E P6=S P8=W
                    let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
                    let ok = if pass == 0 { n * e * s == 0 && e * s * w == 0 } else { n * e * w == 0 && n * s * w == 0 };
                    if ok {
                        doomed.push(r * width + c);
                    }
                }
            }
            for &i in &doomed {
                fg[i] = false;
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
    }
}

/// Thins the free space of `grid` to a one-pixel-wide, connectivity-preserving
/// skeleton.
pub fn skeletonize(grid: &OccupancyGrid) -> Skeleton {
    let (w, h) = (grid.width(), grid.height());
    let free: Vec<bool> = grid.cells().iter().map(|&o| !o).collect();
    let mut pixels = free.clone();
    zhang_suen(w, h, &mut pixels);
    let mut skel = Skeleton::new(w, h, grid.resolution(), pixels);

    let (free_labels, n_free) = label_components(w, h, &free);
    seed_empty_components(grid, &free_labels, n_free, &mut skel);
    reconnect(&free_labels, n_free, &mut skel);
    break_square_blocks(&mut skel);
    skel
}

fn seed_empty_components(grid: &OccupancyGrid, free_labels: &[usize], n_free: usize, skel: &mut Skeleton) {
    let (w, h) = (grid.width(), grid.height());
    let mut has = vec![false; n_free];
    for (i, &p) in skel.pixels.iter().enumerate() {
        if p {
            has[free_labels[i]] = true;
        }
    }
    if has.iter().all(|&x| x) {
        return;
    }
    // most interior cell: largest distance to an obstacle (border included)
    let (pw, ph) = (w + 2, h + 2);
    let mut seeds = vec![true; pw * ph];
    for r in 0..h {
        for c in 0..w {
            seeds[(r + 1) * pw + c + 1] = grid.is_occupied(c, r);
        }
    }
    let d2 = squared_distance_transform(pw, ph, &seeds);
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n_free];
    for i in 0..w * h {
        let lab = free_labels[i];
        if lab == usize::MAX || has[lab] {
            continue;
        }
        let d = d2[(i / w + 1) * pw + i % w + 1];
        if best[lab].is_none_or(|(bd, _)| d > bd) {
            best[lab] = Some((d, i));
        }
    }
    for (_, i) in best.into_iter().flatten() {
        skel.pixels[i] = true;
    }
}

fn reconnect(free_labels: &[usize], n_free: usize, skel: &mut Skeleton) {
    let (w, h) = (skel.width, skel.height);
    loop {
        let (skel_labels, _) = label_components(w, h, &skel.pixels);
        // first skeleton component seen per free component
        let mut anchor: Vec<Option<usize>> = vec![None; n_free];
        let mut split = None;
        for i in 0..w * h {
            if !skel.pixels[i] {
                continue;
            }
            let f = free_labels[i];
            match anchor[f] {
                None => anchor[f] = Some(skel_labels[i]),
                Some(a) if a != skel_labels[i] => {
                    split = Some((f, a));
                    break;
                }
                _ => {}
            }
        }
        let Some((free_comp, comp)) = split else { return };
        // Dijkstra from the anchor piece through this free component until
        // another skeleton piece is reached
        let mut dist = vec![f64::INFINITY; w * h];
        let mut parent = vec![usize::MAX; w * h];
        let mut heap = BinaryHeap::new();
        for i in 0..w * h {
            if skel.pixels[i] && skel_labels[i] == comp {
                dist[i] = 0.0;
                heap.push(HeapItem { cost: 0.0, index: i });
            }
        }
        let mut target = None;
        while let Some(HeapItem { cost, index }) = heap.pop() {
            if cost > dist[index] {
                continue;
            }
            if skel.pixels[index] && skel_labels[index] != comp {
                target = Some(index);
                break;
            }
            let (c, r) = ((index % w) as i64, (index / w) as i64);
            for &(dc, dr) in &RING {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if free_labels[j] != free_comp {
                    continue;
                }
                let step = if dc != 0 && dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let nd = cost + step;
                if nd < dist[j] {
                    dist[j] = nd;
                    parent[j] = index;
                    heap.push(HeapItem { cost: nd, index: j });
                }
            }
        }
        let Some(mut i) = target else {
            log::warn!("could not reconnect skeleton pieces in free component {free_comp}");
            return;
        };
        while parent[i] != usize::MAX {
            skel.pixels[i] = true;
            i = parent[i];
        }
    }
}

fn break_square_blocks(skel: &mut Skeleton) {
    loop {
        let mut changed = false;
        for r in 0..skel.height.saturating_sub(1) {
            for c in 0..skel.width.saturating_sub(1) {
                let (ci, ri) = (c as i64, r as i64);
                if !(skel.get(ci, ri) && skel.get(ci + 1, ri) && skel.get(ci, ri + 1) && skel.get(ci + 1, ri + 1)) {
                    continue;
                }
                for (pc, pr) in [(c, r), (c + 1, r), (c, r + 1), (c + 1, r + 1)] {
                    if skel.neighbour_count(pc, pr) >= 2 && skel.is_simple(pc, pr) {
                        skel.set(pc, pr, false);
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Rewrites single-pixel staircase steps into diagonal moves, until fixpoint.
///
/// A pixel `p` with two orthogonal edge neighbours `a = p + d1`, `b = p + d2`
/// is a stair step when the stair continues past them (`b - d1` or `a - d2`
/// is set). It is dropped if that is topologically safe, which turns
/// `a -> p -> b` into the diagonal move `a -> b`. Genuine right-angle corners
/// (both arms running straight) are kept.
pub fn destair(skeleton: &Skeleton) -> Skeleton {
    let mut s = skeleton.clone();
    const EDGES: [(i64, i64); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
    loop {
        let mut changed = false;
        for r in 0..s.height {
            for c in 0..s.width {
                if !s.pixels[r * s.width + c] || s.neighbour_count(c, r) < 2 {
                    continue;
                }
                let (ci, ri) = (c as i64, r as i64);
                let step = (0..4).any(|k| {
                    let d1 = EDGES[k];
                    let d2 = EDGES[(k + 1) % 4];
                    let a = (ci + d1.0, ri + d1.1);
                    let b = (ci + d2.0, ri + d2.1);
                    s.get(a.0, a.1)
                        && s.get(b.0, b.1)
                        && (s.get(b.0 - d1.0, b.1 - d1.1) || s.get(a.0 - d2.0, a.1 - d2.1))
                });
                if step && s.is_simple(c, r) {
                    s.set(c, r, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return s;
        }
    }
}

#[derive(PartialEq)]
pub(crate) struct HeapItem {
    pub cost: f64,
    pub index: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on cost, ties on the lower index
        other.cost.total_cmp(&self.cost).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn picture(s: &Skeleton) -> Vec<String> {
        (0..s.height)
            .map(|r| (0..s.width).map(|c| if s.get(c as i64, r as i64) { '#' } else { '.' }).collect())
            .collect()
    }

    #[test]
    fn single_free_cell_is_its_own_skeleton() {
        let g = OccupancyGrid::from_ascii(&["###", "#.#", "###"], 1.0).unwrap();
        let s = skeletonize(&g);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn two_by_two_room_keeps_a_pixel() {
        let g = OccupancyGrid::from_ascii(&["####", "#..#", "#..#", "####"], 1.0).unwrap();
        let s = skeletonize(&g);
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn simple_point_cases() {
        // isolated pixel: no foreground neighbours -> not simple
        assert!(!is_simple_ring(&[false; 8]));
        // end of a line
        assert!(is_simple_ring(&[false, false, true, false, false, false, false, false]));
        // middle of a line: removal splits it
        assert!(!is_simple_ring(&[false, false, true, false, false, false, true, false]));
        // centre of a plus: removal would open a hole
        assert!(!is_simple_ring(&[true, false, true, false, true, false, true, false]));
        // interior pixel: removal creates a hole
        assert!(!is_simple_ring(&[true; 8]));
    }

    #[test]
    fn straight_line_survives_destair() {
        let s = Skeleton::from_ascii(&[".......", ".#####.", "......."], 1.0);
        assert_eq!(destair(&s), s);
    }

    #[test]
    fn right_angle_corner_is_kept() {
        let s = Skeleton::from_ascii(&["#####", "....#", "....#", "....#"], 1.0);
        assert_eq!(destair(&s), s);
    }

    #[test]
    fn two_step_staircase_becomes_diagonal() {
        let s = Skeleton::from_ascii(&["##..", ".##.", "..##"], 1.0);
        let d = destair(&s);
        assert_eq!(picture(&d), vec!["#...", ".#..", "..##"]);
        assert_eq!(destair(&d), d);
    }
}
