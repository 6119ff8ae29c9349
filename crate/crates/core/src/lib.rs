//! Role engine for collaborative multi-robot path planning.
//!
//! The pipeline runs in four stages:
//!
//! 1. **Negotiation** ([`envmap`], [`engine::role_negotiation`]): per robot
//!    type, the map is inflated, skeletonized into an environment graph and
//!    searched for an initial path between every agent and every destination.
//! 2. **Qualification and assignment** ([`assignment`]): every feasible
//!    (agent, role) pair is optimized by Gaussian-process MAP inference
//!    ([`gp`]) and the resulting costs feed a Hungarian solver.
//! 3. **Role-playing** ([`role_playing`]): agents re-solve their remaining
//!    trajectory every timestep against a conflict field built from the other
//!    agents' published trajectories.
//! 4. **Monitoring** ([`engine`]): the central loop watches the shared channel
//!    and renegotiates when the world changes or an agent reports distress.
//!
//! The `role-engine` binary wraps all of this behind `negotiate`, `plan`,
//! `simulate` and `bench` subcommands (see [`cli`]).

pub mod assignment;
pub mod bundled;
pub mod cli;
pub mod engine;
pub mod envmap;
pub mod error;
pub mod fmt;
pub mod gp;
pub mod role_playing;

pub use error::{Error, Result};

/// Planar point or vector in meters.
pub type Point2 = nalgebra::Vector2<f64>;

/// Support state `[x, y, vx, vy]`.
pub type State = nalgebra::Vector4<f64>;
