use crate::envmap::sdf::squared_distance_transform;
use crate::error::{Error, Result};
use crate::Point2;

/// 8-bit grayscale raster, row-major with row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::input(format!(
                "image buffer has {} bytes, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    /// Parses a binary (`P5`) or ASCII (`P2`) portable graymap.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::input("truncated PGM header"));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token()?;
        let num = |s: String| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::input(format!("bad PGM number {s:?}")))
        };
        let width = num(token()?)?;
        let height = num(token()?)?;
        let maxval = num(token()?)?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::input(format!("unsupported PGM maxval {maxval}")));
        }
        let scale = |v: usize| -> u8 { ((v * 255 + maxval / 2) / maxval) as u8 };
        let n = width * height;
        let pixels = match magic.as_str() {
            "P5" => {
                // exactly one whitespace byte separates the header from the raster
                let start = pos + 1;
                if bytes.len() < start + n {
                    return Err(Error::input("truncated PGM raster"));
                }
                bytes[start..start + n].iter().map(|&b| scale(b as usize)).collect()
            }
            "P2" => {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    out.push(scale(num(token()?)?));
                }
                out
            }
            other => return Err(Error::input(format!("unsupported image format {other:?}"))),
        };
        GrayImage::new(width, height, pixels)
    }

    /// Encodes as binary `P5`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Binary world map. Cell `(col, row)` covers
/// `[col*res, (col+1)*res) x [row*res, (row+1)*res)` in world meters.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    /// All-free grid.
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::from_cells(width, height, resolution, vec![false; width * height])
    }

    pub fn from_cells(width: usize, height: usize, resolution: f64, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("grid must be at least 1x1"));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::input(format!("resolution must be positive, got {resolution}")));
        }
        if cells.len() != width * height {
            return Err(Error::input("cell buffer does not match grid size"));
        }
        Ok(Self { width, height, resolution, cells })
    }

    /// Builds a grid from an ASCII picture: `#` occupied, anything else free.
    pub fn from_ascii(rows: &[&str], resolution: f64) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::input("ragged ascii grid"));
        }
        let cells = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        Self::from_cells(width, height, resolution, cells)
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

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.cells[self.index(col, row)]
    }

    /// Out-of-bounds coordinates count as occupied.
    #[inline]
    pub fn is_occupied_at(&self, col: i64, row: i64) -> bool {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return true;
        }
        self.cells[row as usize * self.width + col as usize]
    }

    pub fn set(&mut self, col: usize, row: usize, occupied: bool) {
        let i = self.index(col, row);
        self.cells[i] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn free_count(&self) -> usize {
        self.cells.len() - self.occupied_count()
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new((col as f64 + 0.5) * self.resolution, (row as f64 + 0.5) * self.resolution)
    }

    /// Cell containing `p`, or `None` outside the grid.
    pub fn cell_of(&self, p: &Point2) -> Option<(usize, usize)> {
        let c = (p.x / self.resolution).floor();
        let r = (p.y / self.resolution).floor();
        if !(c.is_finite() && r.is_finite()) || c < 0.0 || r < 0.0 {
            return None;
        }
        let (c, r) = (c as usize, r as usize);
        (c < self.width && r < self.height).then_some((c, r))
    }

    /// `true` when `p` is outside the grid or inside an occupied cell.
    pub fn is_occupied_point(&self, p: &Point2) -> bool {
        self.cell_of(p).is_none_or(|(c, r)| self.is_occupied(c, r))
    }

    /// World extent `(width, height)` in meters.
    pub fn extent(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    /// Marks every cell whose center lies in the axis-aligned world rectangle.
    pub fn fill_rect(&mut self, min: Point2, max: Point2, occupied: bool) {
        for row in 0..self.height {
            for col in 0..self.width {
                let c = self.cell_center(col, row);
                if c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y {
                    self.set(col, row, occupied);
                }
            }
        }
    }

    /// Rendering as a grayscale image (occupied = 0, free = 255).
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.cells.iter().map(|&c| if c { 0 } else { 255 }).collect(),
        }
    }
}

/// Disc robot parameters shared by every agent of one type.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotType {
    pub type_id: String,
    /// Body radius in meters.
    pub radius: f64,
    /// Speed limit in m/s.
    pub v_max: f64,
    /// Obstacle factor standard deviation.
    pub sigma_obs: f64,
    /// Safety distance of the hinge loss in meters.
    pub epsilon_safe: f64,
}

impl RobotType {
    pub fn validate(&self) -> Result<()> {
        let ok = self.radius > 0.0
            && self.v_max > 0.0
            && self.epsilon_safe >= 0.0
            && self.sigma_obs > 0.0
            && [self.radius, self.v_max, self.epsilon_safe, self.sigma_obs].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("invalid robot type {:?}", self)))
        }
    }
}

/// Thresholds a grayscale image: a cell is occupied iff its pixel is darker
/// than `occupied_threshold`.
pub fn load_grid(image: &GrayImage, occupied_threshold: u8, resolution: f64) -> Result<OccupancyGrid> {
    if image.width == 0 || image.height == 0 || image.pixels.is_empty() {
        return Err(Error::input("empty image"));
    }
    let cells = image.pixels.iter().map(|&p| p < occupied_threshold).collect();
    OccupancyGrid::from_cells(image.width, image.height, resolution, cells)
}

fn inflate(grid: &OccupancyGrid, radius: f64, bounded: bool) -> OccupancyGrid {
    let radius_cells = radius / grid.resolution;
    let smaller = grid.width.min(grid.height) as f64;
    if radius_cells > smaller / 2.0 {
        log::warn!(
            "robot radius {radius} m ({radius_cells:.1} cells) exceeds half of the {}x{} grid; map is fully blocked",
            grid.width,
            grid.height
        );
        return OccupancyGrid { cells: vec![true; grid.cells.len()], ..grid.clone() };
    }
    if radius_cells <= 0.0 && !bounded {
        return grid.clone();
    }
    let (w, h) = (grid.width, grid.height);
    let limit = radius_cells * radius_cells + 1e-9;
    let cells = if bounded {
        // one-cell occupied ring around the map
        let (pw, ph) = (w + 2, h + 2);
        let mut seeds = vec![true; pw * ph];
        for r in 0..h {
            for c in 0..w {
                seeds[(r + 1) * pw + c + 1] = grid.is_occupied(c, r);
            }
        }
        let d2 = squared_distance_transform(pw, ph, &seeds);
        let mut out = vec![false; w * h];
        for r in 0..h {
            for c in 0..w {
                out[r * w + c] = grid.is_occupied(c, r) || d2[(r + 1) * pw + c + 1] <= limit;
            }
        }
        out
    } else {
        let d2 = squared_distance_transform(w, h, &grid.cells);
        d2.iter().zip(&grid.cells).map(|(&d, &occ)| occ || d <= limit).collect()
    };
    OccupancyGrid { cells, ..grid.clone() }
}

/// Configuration-space inflation: a cell becomes occupied iff some occupied
/// input cell center lies within `robot.radius` of its center.
pub fn dilate_for_robot(grid: &OccupancyGrid, robot: &RobotType) -> OccupancyGrid {
    inflate(grid, robot.radius, false)
}

/// The feasible-location map used for E-Map construction and line-of-sight
/// checks: [`dilate_for_robot`] plus inflation of the map border, since the
/// world outside the grid is treated as an obstacle.
pub fn feasible_map(grid: &OccupancyGrid, robot: &RobotType) -> OccupancyGrid {
    inflate(grid, robot.radius, true)
}
