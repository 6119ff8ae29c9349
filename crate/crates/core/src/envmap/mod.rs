//! Environment representations per robot type: occupancy grids, signed
//! distance fields, skeleton graphs and initial paths.

pub mod emap;
pub mod grid;
pub mod init_path;
pub mod sdf;
pub mod search;
pub mod skeleton;

pub use emap::{extract_feature_nodes, EMapEdge, EMapGraph, EMapNode, SkeletonLoc};
pub use grid::{dilate_for_robot, feasible_map, load_grid, GrayImage, OccupancyGrid, RobotType};
pub use init_path::{make_init_path, InitialPath};
pub use sdf::{compute_sdf, SignedDistanceField};
pub use search::{astar_octile, bresenham, find_aux_nodes, line_of_sight, octile, reduce_nodes, AuxRoute, NodePath};
pub use skeleton::{destair, skeletonize, Skeleton};
