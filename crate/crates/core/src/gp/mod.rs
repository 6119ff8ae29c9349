//! Trajectories as Gaussian-process support states and their MAP estimation
//! by Levenberg-Marquardt over a chain-structured factor graph.

pub mod factors;
pub mod linear;
pub mod plan;
pub mod prior;
pub mod role;
pub mod solver;

pub use factors::{
    conf_cost, hinge_cost, obstacle_residual, pairwise_conflict_residual, velocity_limit_residual, DistanceField,
    Factor, FixMask, LinearFactor,
};
pub use linear::{linearize, Linearization, NormalSystem};
pub use plan::{optimize_role, qualification_value, trajectory_factors, Anchors, PlanSettings};
pub use prior::{gp_prior_residual, process_noise, transition, GpPrior};
pub use role::{trajectory_csv, ProcessRole};
pub use solver::{convergence, solve_lm, SolveReport, SolverParams};
