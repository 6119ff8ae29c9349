//! Likelihood and constraint factors of the trajectory factor graph.

use nalgebra::{SMatrix, SVector};

use crate::envmap::SignedDistanceField;
use crate::{Point2, State};

/// Signed distance lookup, possibly time-varying. `step` is a global time
/// index; static fields ignore it.
pub trait DistanceField: Sync {
    fn distance(&self, p: &Point2, step: usize) -> (f64, Point2);
}

impl DistanceField for SignedDistanceField {
    fn distance(&self, p: &Point2, _step: usize) -> (f64, Point2) {
        self.value_and_gradient(p)
    }
}

/// Hinge `eps - d` for `d <= eps`, else `0`.
pub fn hinge_cost(d: f64, epsilon: f64) -> f64 {
    if d <= epsilon {
        epsilon - d
    } else {
        0.0
    }
}

/// Unweighted obstacle residual `hinge(sdf(x) - radius, eps)` and its
/// gradient over the state.
pub fn obstacle_residual(
    state: &State,
    field: &dyn DistanceField,
    step: usize,
    radius: f64,
    epsilon: f64,
) -> (f64, SVector<f64, 4>) {
    let p = Point2::new(state[0], state[1]);
    let (d, grad) = field.distance(&p, step);
    let r = hinge_cost(d - radius, epsilon);
    if d - radius <= epsilon {
        (r, SVector::<f64, 4>::new(-grad.x, -grad.y, 0.0, 0.0))
    } else {
        (0.0, SVector::zeros())
    }
}

/// Speed excess `max(0, |v| - v_max)` and its gradient.
pub fn velocity_limit_residual(state: &State, v_max: f64) -> (f64, SVector<f64, 4>) {
    let v = Point2::new(state[2], state[3]);
    let speed = v.norm();
    if speed > v_max && speed > 0.0 {
        (speed - v_max, SVector::<f64, 4>::new(0.0, 0.0, v.x / speed, v.y / speed))
    } else {
        (0.0, SVector::zeros())
    }
}

/// `hinge(|x_i - x_j| - radii, eps)` and its gradient with respect to agent
/// `i`'s state. Coincident positions push along `+x`.
pub fn pairwise_conflict_residual(state: &State, other: &Point2, radii: f64, epsilon: f64) -> (f64, SVector<f64, 4>) {
    let diff = Point2::new(state[0], state[1]) - other;
    let dist = diff.norm();
    if dist - radii > epsilon {
        return (0.0, SVector::zeros());
    }
    let dir = if dist > 0.0 { diff / dist } else { Point2::new(1.0, 0.0) };
    (hinge_cost(dist - radii, epsilon), SVector::<f64, 4>::new(-dir.x, -dir.y, 0.0, 0.0))
}

/// `F_conf = sum_{k<N} c(x_k) |v_k| dt` (left rectangle rule), where `c` is
/// the obstacle hinge. `start_step` is the global index of `states[0]`.
pub fn conf_cost(
    states: &[State],
    dt: f64,
    start_step: usize,
    field: &dyn DistanceField,
    radius: f64,
    epsilon: f64,
) -> f64 {
    let n = states.len().saturating_sub(1);
    (0..n)
        .map(|k| {
            let s = &states[k];
            let (d, _) = field.distance(&Point2::new(s[0], s[1]), start_step + k);
            hinge_cost(d - radius, epsilon) * Point2::new(s[2], s[3]).norm() * dt
        })
        .sum()
}

/// Which components a fix-state factor pins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixMask {
    Full,
    Position,
}

/// One factor on local state indices of a single trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    /// Connects states `k` and `k + 1`.
    GpPrior { k: usize },
    Obstacle { k: usize, step: usize, radius: f64, epsilon: f64, sigma: f64 },
    FixState { k: usize, target: State, mask: FixMask, sigma: f64 },
    VelocityLimit { k: usize, v_max: f64, sigma: f64 },
    /// The other agent's position is held constant.
    PairwiseConflict { k: usize, other: Point2, radii: f64, epsilon: f64, sigma: f64 },
}

impl Factor {
    /// Lowest state index touched.
    pub fn first_state(&self) -> usize {
        match *self {
            Factor::GpPrior { k }
            | Factor::Obstacle { k, .. }
            | Factor::FixState { k, .. }
            | Factor::VelocityLimit { k, .. }
            | Factor::PairwiseConflict { k, .. } => k,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Factor::GpPrior { .. })
    }
}

/// Weighted residual block of one factor. `jac` columns `0..4` act on state
/// `k`, columns `4..8` on `k + 1` (binary factors only).
#[derive(Clone, Debug)]
pub struct LinearFactor {
    pub k: usize,
    pub binary: bool,
    pub rows: usize,
    pub residual: SVector<f64, 4>,
    pub jac: SMatrix<f64, 4, 8>,
}

impl LinearFactor {
    fn unary(k: usize, rows: usize) -> Self {
        Self { k, binary: false, rows, residual: SVector::zeros(), jac: SMatrix::zeros() }
    }

    /// `1/2 |r|^2` of the weighted residual.
    pub fn cost(&self) -> f64 {
        0.5 * self.residual.rows(0, self.rows).norm_squared()
    }
}

/// Weighted residual and Jacobian of `factor` at `states`.
pub(crate) fn linearize_factor(
    factor: &Factor,
    states: &[State],
    prior: &super::GpPrior,
    field: Option<&dyn DistanceField>,
) -> LinearFactor {
    match *factor {
        Factor::GpPrior { k } => {
            let w = prior.whitening();
            let r = super::gp_prior_residual(&states[k], &states[k + 1], prior.phi());
            let mut jac = SMatrix::<f64, 4, 8>::zeros();
            jac.fixed_view_mut::<4, 4>(0, 0).copy_from(&(-w * prior.phi()));
            jac.fixed_view_mut::<4, 4>(0, 4).copy_from(w);
            LinearFactor { k, binary: true, rows: 4, residual: w * r, jac }
        }
        Factor::Obstacle { k, step, radius, epsilon, sigma } => {
            let mut lf = LinearFactor::unary(k, 1);
            if let Some(field) = field {
                let (r, g) = obstacle_residual(&states[k], field, step, radius, epsilon);
                lf.residual[0] = r / sigma;
                lf.jac.fixed_view_mut::<1, 4>(0, 0).copy_from(&(g.transpose() / sigma));
            }
            lf
        }
        Factor::FixState { k, target, mask, sigma } => {
            let rows = match mask {
                FixMask::Full => 4,
                FixMask::Position => 2,
            };
            let mut lf = LinearFactor::unary(k, rows);
            for i in 0..rows {
                lf.residual[i] = (states[k][i] - target[i]) / sigma;
                lf.jac[(i, i)] = 1.0 / sigma;
            }
            lf
        }
        Factor::VelocityLimit { k, v_max, sigma } => {
            let mut lf = LinearFactor::unary(k, 1);
            let (r, g) = velocity_limit_residual(&states[k], v_max);
            lf.residual[0] = r / sigma;
            lf.jac.fixed_view_mut::<1, 4>(0, 0).copy_from(&(g.transpose() / sigma));
            lf
        }
        Factor::PairwiseConflict { k, other, radii, epsilon, sigma } => {
            let mut lf = LinearFactor::unary(k, 1);
            let (r, g) = pairwise_conflict_residual(&states[k], &other, radii, epsilon);
            lf.residual[0] = r / sigma;
            lf.jac.fixed_view_mut::<1, 4>(0, 0).copy_from(&(g.transpose() / sigma));
            lf
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinge_branches() {
        assert!((hinge_cost(0.0, 0.1) - 0.1).abs() < 1e-15);
        assert_eq!(hinge_cost(0.1, 0.1), 0.0);
        assert_eq!(hinge_cost(0.2, 0.1), 0.0);
        assert!((hinge_cost(-0.5, 0.1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn velocity_limit_excess() {
        let (r, _) = velocity_limit_residual(&State::new(0.0, 0.0, 0.3, 0.0), 0.22);
        assert!((r - 0.08).abs() < 1e-12);
        let (r, g) = velocity_limit_residual(&State::new(0.0, 0.0, 0.1, 0.1), 0.22);
        assert_eq!(r, 0.0);
        assert_eq!(g, SVector::<f64, 4>::zeros());
    }

    #[test]
    fn pairwise_cases() {
        let s = State::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(pairwise_conflict_residual(&s, &Point2::new(1.0, 0.0), 0.2, 0.1).0, 0.0);
        let (r, _) = pairwise_conflict_residual(&s, &Point2::new(0.2, 0.0), 0.2, 0.1);
        assert!((r - 0.1).abs() < 1e-12);
        let (r, g) = pairwise_conflict_residual(&s, &Point2::zeros(), 0.2, 0.1);
        assert!((r - 0.3).abs() < 1e-12);
        assert_eq!((g[0], g[1]), (-1.0, 0.0));
    }

    #[test]
    fn stationary_trajectory_has_no_conf_cost() {
        let grid = crate::envmap::OccupancyGrid::new(10, 10, 0.1).unwrap();
        let sdf = crate::envmap::compute_sdf(&grid);
        let states = vec![State::new(0.05, 0.05, 0.0, 0.0); 5];
        assert_eq!(conf_cost(&states, 0.1, 0, &sdf, 0.1, 0.1), 0.0);
    }
}
