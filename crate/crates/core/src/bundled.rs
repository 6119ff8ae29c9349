//! Built-in benchmark maps: six 100x100 grids at 0.05 m per cell.
//!
//! Every map is a list of occupied rectangles in cell units
//! `(col0, row0, col1, row1)`, end-exclusive, with row 0 at the top.

use crate::envmap::OccupancyGrid;
use crate::{Error, Result};

pub const SIZE: usize = 100;
pub const RESOLUTION: f64 = 0.05;

type Rect = (usize, usize, usize, usize);

/// Scattered boxes of mixed sizes.
const BOXES: &[Rect] = &[
    (15, 15, 35, 30),
    (55, 10, 70, 35),
    (80, 20, 92, 40),
    (40, 42, 60, 58),
    (10, 60, 30, 80),
    (70, 55, 88, 75),
    (35, 75, 55, 90),
];

/// A wall with two 3-cell slots and one wide opening.
const GAPS: &[Rect] = &[
    (48, 0, 52, 20),
    (48, 23, 52, 45),
    (48, 48, 52, 70),
    (48, 82, 52, 100),
    (15, 30, 30, 40),
    (70, 55, 85, 65),
];

/// Four rooms; the south-west/south-east door is only 4 cells wide.
const ROOMS: &[Rect] = &[
    (0, 48, 12, 52),
    (20, 48, 80, 52),
    (92, 48, 100, 52),
    (48, 0, 52, 20),
    (48, 28, 52, 48),
    (48, 52, 52, 77),
    (48, 81, 52, 100),
];

/// Staggered walls forming an S-shaped corridor.
const CORRIDORS: &[Rect] = &[
    (0, 22, 75, 27),
    (25, 48, 100, 53),
    (0, 74, 75, 79),
    (85, 5, 90, 15),
    (10, 85, 15, 95),
];

/// Regular array of square pillars.
const PILLARS: &[Rect] = &[
    (12, 12, 22, 22),
    (45, 12, 55, 22),
    (78, 12, 88, 22),
    (12, 45, 22, 55),
    (45, 45, 55, 55),
    (78, 45, 88, 55),
    (12, 78, 22, 88),
    (45, 78, 55, 88),
    (78, 78, 88, 88),
];

/// Two rooms joined by a 6-cell (0.3 m) hallway.
const HALLWAY: &[Rect] = &[(35, 0, 65, 47), (35, 53, 65, 100)];

pub const MAP_NAMES: [&str; 6] = ["boxes", "gaps", "rooms", "corridors", "pillars", "hallway"];

fn rects(name: &str) -> Option<&'static [Rect]> {
    Some(match name {
        "boxes" => BOXES,
        "gaps" => GAPS,
        "rooms" => ROOMS,
        "corridors" => CORRIDORS,
        "pillars" => PILLARS,
        "hallway" => HALLWAY,
        _ => return None,
    })
}

/// The bundled map called `name`.
pub fn map(name: &str) -> Result<OccupancyGrid> {
    let rects = rects(name).ok_or_else(|| Error::input(format!("unknown bundled map '{name}'")))?;
    let mut grid = OccupancyGrid::new(SIZE, SIZE, RESOLUTION)?;
    for &(c0, r0, c1, r1) in rects {
        for r in r0..r1 {
            for c in c0..c1 {
                grid.set(c, r, true);
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_maps_build() {
        for name in MAP_NAMES {
            let g = map(name).unwrap();
            assert_eq!((g.width(), g.height()), (SIZE, SIZE));
            assert!(g.occupied_count() > 0 && g.free_count() > g.occupied_count());
        }
        assert!(map("nowhere").is_err());
    }

    #[test]
    fn hallway_is_six_cells_wide() {
        let g = map("hallway").unwrap();
        let free: Vec<usize> = (0..SIZE).filter(|&r| !g.is_occupied(50, r)).collect();
        assert_eq!(free, (47..53).collect::<Vec<_>>());
    }
}
