//! Plain SVG renders of maps, graphs, plans and simulation traces.

use std::fmt::Write;

use crate::envmap::{EMapGraph, OccupancyGrid, SignedDistanceField};
use crate::gp::ProcessRole;
use crate::role_playing::SimulationTrace;
use crate::Point2;

/// Pixels per meter.
const SCALE: f64 = 100.0;

const PALETTE: [&str; 8] = ["#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"];

fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn px(v: f64) -> String {
    format!("{:.1}", v * SCALE)
}

fn open(grid: &OccupancyGrid) -> String {
    let (w, h) = grid.extent();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n\
         <rect width=\"{0}\" height=\"{1}\" fill=\"white\" stroke=\"black\"/>\n",
        px(w),
        px(h)
    )
}

/// Horizontal runs of cells for which `class` returns the same `Some` value.
fn runs<T: PartialEq + Copy>(grid_w: usize, grid_h: usize, class: impl Fn(usize, usize) -> Option<T>) -> Vec<(usize, usize, usize, T)> {
    let mut out = Vec::new();
    for r in 0..grid_h {
        let mut c = 0;
        while c < grid_w {
            let Some(v) = class(c, r) else {
                c += 1;
                continue;
            };
            let start = c;
            while c < grid_w && class(c, r) == Some(v) {
                c += 1;
            }
            out.push((r, start, c - start, v));
        }
    }
    out
}

fn obstacles(out: &mut String, grid: &OccupancyGrid, fill: &str) {
    let res = grid.resolution();
    let _ = writeln!(out, "<g fill=\"{fill}\">");
    for (r, c, len, ()) in runs(grid.width(), grid.height(), |c, r| grid.is_occupied(c, r).then_some(())) {
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
            px(c as f64 * res),
            px(r as f64 * res),
            px(len as f64 * res),
            px(res)
        );
    }
    out.push_str("</g>\n");
}

fn marker(out: &mut String, p: &Point2, fill: &str, label: &str) {
    let _ = writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{fill}\"><title>{label}</title></circle>",
        px(p.x),
        px(p.y)
    );
}

fn polyline(out: &mut String, points: impl Iterator<Item = Point2>, stroke: &str) {
    let pts: Vec<String> = points.map(|p| format!("{},{}", px(p.x), px(p.y))).collect();
    let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"2\"/>", pts.join(" "));
}

/// Obstacles, sources (green), destinations (blue) and planned trajectories.
pub fn plan_svg(grid: &OccupancyGrid, sources: &[(usize, Point2)], dests: &[(usize, Point2)], roles: &[ProcessRole]) -> String {
    let mut out = open(grid);
    obstacles(&mut out, grid, "black");
    for (i, role) in roles.iter().enumerate() {
        polyline(&mut out, role.positions(), colour(i));
    }
    for (id, p) in sources {
        marker(&mut out, p, "green", &format!("agent {id}"));
    }
    for (id, p) in dests {
        marker(&mut out, p, "blue", &format!("role {id}"));
    }
    out.push_str("</svg>\n");
    out
}

/// Executed paths plus discs animated over the trace.
pub fn trace_svg(grid: &OccupancyGrid, trace: &SimulationTrace) -> String {
    let mut out = open(grid);
    obstacles(&mut out, grid, "black");
    let frames = trace.frames.len();
    let dur = (frames as f64 * trace.dt).max(trace.dt);
    for (i, id) in trace.agent_ids.iter().enumerate() {
        polyline(&mut out, (0..frames).map(|f| trace.position(f, i)), colour(i));
        if frames == 0 {
            continue;
        }
        let p0 = trace.position(0, i);
        let xs: Vec<String> = (0..frames).map(|f| px(trace.position(f, i).x)).collect();
        let ys: Vec<String> = (0..frames).map(|f| px(trace.position(f, i).y)).collect();
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.6\"><title>agent {id}</title>\n\
             <animate attributeName=\"cx\" dur=\"{dur}s\" repeatCount=\"indefinite\" values=\"{}\"/>\n\
             <animate attributeName=\"cy\" dur=\"{dur}s\" repeatCount=\"indefinite\" values=\"{}\"/>\n</circle>",
            px(p0.x),
            px(p0.y),
            px(trace.radii[i]),
            colour(i),
            xs.join(";"),
            ys.join(";")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Signed distance heat map: dark inside obstacles, light far from them.
pub fn sdf_svg(grid: &OccupancyGrid, sdf: &SignedDistanceField) -> String {
    let mut out = open(grid);
    let res = sdf.resolution();
    let max = sdf.values().iter().cloned().fold(res, f64::max);
    let level = |c: usize, r: usize| -> Option<u8> {
        let v = sdf.at(c, r);
        let t = if v <= 0.0 { 0.0 } else { (v / max).sqrt() };
        Some((t * 31.0).round() as u8)
    };
    for (r, c, len, l) in runs(sdf.width(), sdf.height(), level) {
        let g = (l as u32 * 255 / 31) as u8;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({g},{g},255)\"/>",
            px(c as f64 * res),
            px(r as f64 * res),
            px(len as f64 * res),
            px(res)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Feasible map, skeleton arcs and feature nodes of one robot type.
pub fn emap_svg(feasible: &OccupancyGrid, emap: &EMapGraph) -> String {
    let mut out = open(feasible);
    obstacles(&mut out, feasible, "#bbbbbb");
    for e in &emap.edges {
        let pts = e.cells.iter().map(|&(c, r)| feasible.cell_center(c, r));
        polyline(&mut out, pts, "#1f77b4");
    }
    for n in &emap.nodes {
        marker(&mut out, &emap.node_position(n.id), "#d62728", &format!("node {}", n.id));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_merge_cells() {
        let g = OccupancyGrid::from_ascii(&["##.#", "...."], 1.0).unwrap();
        let r = runs(4, 2, |c, r| g.is_occupied(c, r).then_some(()));
        assert_eq!(r, vec![(0, 0, 2, ()), (0, 3, 1, ())]);
    }

    #[test]
    fn plan_svg_marks_endpoints() {
        let g = OccupancyGrid::new(4, 4, 0.5).unwrap();
        let s = plan_svg(&g, &[(0, Point2::new(0.5, 0.5))], &[(1, Point2::new(1.5, 1.5))], &[]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("fill=\"green\"") && s.contains("fill=\"blue\""));
    }
}
