//! Exact Euclidean signed distance fields over occupancy grids.
//!
//! Distances are measured between cell centers using the separable
//! lower-envelope transform of Felzenszwalb and Huttenlocher, so every cell
//! value is exact rather than a chamfer approximation.
//!
//! Sign convention (bounded world, the map border counts as obstacle):
//! * free cell: `+` distance to the nearest occupied cell center
//! * occupied cell: `resolution - ` distance to the nearest free cell center,
//!   so obstacle cells touching free space read `0` and deeper cells go
//!   negative. This keeps the field 1-Lipschitz across the free/occupied seam.

use crate::envmap::grid::OccupancyGrid;
use crate::Point2;

const FAR: f64 = 1e20;

/// 1-D squared distance transform of sampled function `f` (lower envelope of
/// parabolas). Writes into `out`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: replace the only parabola
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance (in cells) from every cell to the nearest `seed` cell.
/// Cells with no seed anywhere get a huge value.
pub(crate) fn squared_distance_transform(width: usize, height: usize, seeds: &[bool]) -> Vec<f64> {
    assert_eq!(seeds.len(), width * height);
    let mut grid: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { FAR }).collect();
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for c in 0..width {
        for r in 0..height {
            f[r] = grid[r * width + c];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for r in 0..height {
            grid[r * width + c] = out[r];
        }
    }
    for r in 0..height {
        f[..width].copy_from_slice(&grid[r * width..(r + 1) * width]);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        grid[r * width..(r + 1) * width].copy_from_slice(&out[..width]);
    }
    grid.iter().map(|&d| if d >= FAR * 0.5 { FAR } else { d }).collect()
}

/// Signed distances in meters, sampled at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    values: Vec<f64>,
}

/// Builds the signed distance field of `grid` with the bounded-world
/// convention (a virtual obstacle ring just outside the map).
pub fn compute_sdf(grid: &OccupancyGrid) -> SignedDistanceField {
    let (w, h, res) = (grid.width(), grid.height(), grid.resolution());
    let (pw, ph) = (w + 2, h + 2);
    let mut occ = vec![true; pw * ph];
    for r in 0..h {
        for c in 0..w {
            occ[(r + 1) * pw + c + 1] = grid.is_occupied(c, r);
        }
    }
    let to_occ = squared_distance_transform(pw, ph, &occ);
    let free: Vec<bool> = grid.cells().iter().map(|&o| !o).collect();
    let any_free = free.iter().any(|&f| f);
    let to_free = if any_free { squared_distance_transform(w, h, &free) } else { Vec::new() };
    let deepest = -((w + h) as f64) * res;
    let mut values = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            values[i] = if grid.is_occupied(c, r) {
                if any_free {
                    res - to_free[i].sqrt() * res
                } else {
                    deepest
                }
            } else {
                to_occ[(r + 1) * pw + c + 1].sqrt() * res
            };
        }
    }
    SignedDistanceField { width: w, height: h, resolution: res, values }
}

impl SignedDistanceField {
    pub fn from_values(width: usize, height: usize, resolution: f64, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        Self { width, height, resolution, values }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new((col as f64 + 0.5) * self.resolution, (row as f64 + 0.5) * self.resolution)
    }

    /// Bilinear interpolation between cell centers.
    pub fn value(&self, p: &Point2) -> f64 {
        self.value_and_gradient(p).0
    }

    /// Interpolated value together with its exact spatial gradient (m/m).
    ///
    /// Positions are clamped to the map extent. Within the half-cell band
    /// along the border the nearest interpolation patch is extrapolated
    /// linearly, so the gradient keeps pointing into the map.
    pub fn value_and_gradient(&self, p: &Point2) -> (f64, Point2) {
        let res = self.resolution;
        let (ex, ey) = (self.width as f64 * res, self.height as f64 * res);
        let x = p.x.clamp(0.0, ex);
        let y = p.y.clamp(0.0, ey);
        let u = x / res - 0.5;
        let v = y / res - 0.5;
        let (i0, fu) = patch(u, self.width);
        let (j0, fv) = patch(v, self.height);
        let i1 = (i0 + 1).min(self.width - 1);
        let j1 = (j0 + 1).min(self.height - 1);
        let v00 = self.at(i0, j0);
        let v10 = self.at(i1, j0);
        let v01 = self.at(i0, j1);
        let v11 = self.at(i1, j1);
        let value = v00 * (1.0 - fu) * (1.0 - fv) + v10 * fu * (1.0 - fv) + v01 * (1.0 - fu) * fv + v11 * fu * fv;
        let mut gx = ((1.0 - fv) * (v10 - v00) + fv * (v11 - v01)) / res;
        let mut gy = ((1.0 - fu) * (v01 - v00) + fu * (v11 - v10)) / res;
        if p.x < 0.0 || p.x > ex {
            gx = 0.0;
        }
        if p.y < 0.0 || p.y > ey {
            gy = 0.0;
        }
        (value, Point2::new(gx, gy))
    }

    /// Applies `f` to every cell value, e.g. to take pointwise minima.
    pub fn map_cells(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        for r in 0..self.height {
            for c in 0..self.width {
                let i = r * self.width + c;
                self.values[i] = f(c, r, self.values[i]);
            }
        }
    }
}

fn patch(u: f64, n: usize) -> (usize, f64) {
    if n < 2 {
        return (0, 0.0);
    }
    let i0 = (u.floor().max(0.0) as usize).min(n - 2);
    (i0, u - i0 as f64)
}
