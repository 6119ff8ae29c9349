//! Space-time conflict fields: the static distance field with other agents'
//! predicted discs stamped in at matching time steps.

use std::sync::Arc;

use crate::envmap::SignedDistanceField;
use crate::gp::DistanceField;
use crate::Point2;

use super::channel::Snapshot;

/// How agents account for each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingMode {
    /// Stamp every other agent's published trajectory, time-aligned.
    ConflictField,
    /// Stamp only the other agents' current positions, for every step.
    LastPosition,
    /// No stamping; pairwise conflict factors against published trajectories.
    PairwiseFactor,
}

/// Disc of another agent at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

/// Static field plus discs for steps `first_step..first_step + discs.len()`.
///
/// Inside a disc's stamping radius (`disc radius + own radius + epsilon`) the
/// value is `min(static, |p - c| - disc radius)`, the clearance to the other
/// body; elsewhere it is the static value. The cut-off only ever changes
/// values above the hinge band, so obstacle residuals see the full disc.
#[derive(Clone, Debug)]
pub struct ConflictField {
    pub static_field: Arc<SignedDistanceField>,
    pub first_step: usize,
    pub discs: Vec<Vec<Disc>>,
    /// Own radius plus safety distance.
    pub reach: f64,
}

impl ConflictField {
    pub fn empty(static_field: Arc<SignedDistanceField>) -> Self {
        Self { static_field, first_step: 0, discs: Vec::new(), reach: 0.0 }
    }

    pub fn discs_at(&self, step: usize) -> &[Disc] {
        step.checked_sub(self.first_step).and_then(|i| self.discs.get(i)).map_or(&[], Vec::as_slice)
    }

    /// Field sampled at cell centers for one step.
    pub fn rasterize(&self, step: usize) -> SignedDistanceField {
        let mut out = (*self.static_field).clone();
        let discs = self.discs_at(step);
        let res = out.resolution();
        out.map_cells(|c, r, v| {
            let p = Point2::new((c as f64 + 0.5) * res, (r as f64 + 0.5) * res);
            discs.iter().fold(v, |acc, d| {
                let dist = (p - d.center).norm();
                if dist <= d.radius + self.reach {
                    acc.min(dist - d.radius)
                } else {
                    acc
                }
            })
        });
        out
    }
}

impl DistanceField for ConflictField {
    fn distance(&self, p: &Point2, step: usize) -> (f64, Point2) {
        let (mut value, mut grad) = self.static_field.value_and_gradient(p);
        for d in self.discs_at(step) {
            let diff = p - d.center;
            let dist = diff.norm();
            if dist > d.radius + self.reach {
                continue;
            }
            let v = dist - d.radius;
            if v < value {
                value = v;
                grad = if dist > 0.0 { diff / dist } else { Point2::new(1.0, 0.0) };
            }
        }
        (value, grad)
    }
}

/// Builds agent `agent_id`'s conflict field for steps `step..=step + horizon`
/// from a snapshot. Entries published more than `horizon` steps ago only
/// contribute their last known position.
pub fn make_conflict_field(
    snapshot: &Snapshot,
    agent_id: usize,
    static_field: Arc<SignedDistanceField>,
    own_radius: f64,
    epsilon: f64,
    radii: &dyn Fn(usize) -> f64,
    step: usize,
    horizon: usize,
    mode: SharingMode,
) -> ConflictField {
    let mut field = ConflictField {
        static_field,
        first_step: step,
        discs: vec![Vec::new(); horizon + 1],
        reach: own_radius + epsilon,
    };
    if mode == SharingMode::PairwiseFactor {
        return field;
    }
    for other in snapshot.others(agent_id) {
        let radius = radii(other.role.agent_id);
        let stale = other.step + horizon < step;
        if stale {
            log::warn!(
                "agent {agent_id}: entry of agent {} is from step {} (now {step}); using its last position",
                other.role.agent_id,
                other.step
            );
        }
        for (i, discs) in field.discs.iter_mut().enumerate() {
            let t = match (mode, stale) {
                (SharingMode::ConflictField, false) => step + i,
                (_, true) => other.step,
                _ => step,
            };
            discs.push(Disc { center: other.role.position_at_step(t), radius });
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envmap::{compute_sdf, OccupancyGrid};

    #[test]
    fn no_discs_means_static() {
        let sdf = Arc::new(compute_sdf(&OccupancyGrid::new(8, 8, 0.1).unwrap()));
        let f = ConflictField::empty(sdf.clone());
        assert_eq!(f.rasterize(3), *sdf);
        let p = Point2::new(0.33, 0.41);
        assert_eq!(f.distance(&p, 0), sdf.value_and_gradient(&p));
    }

    #[test]
    fn disc_lowers_only_inside_reach() {
        let sdf = Arc::new(compute_sdf(&OccupancyGrid::new(20, 20, 0.1).unwrap()));
        let f = ConflictField {
            static_field: sdf.clone(),
            first_step: 2,
            discs: vec![vec![Disc { center: Point2::new(1.05, 1.05), radius: 0.1 }]],
            reach: 0.15,
        };
        let (v, g) = f.distance(&Point2::new(1.25, 1.05), 2);
        assert!((v - 0.1).abs() < 1e-12);
        assert!((g - Point2::new(1.0, 0.0)).norm() < 1e-12);
        // other steps are untouched
        assert_eq!(f.distance(&Point2::new(1.25, 1.05), 3).0, sdf.value(&Point2::new(1.25, 1.05)));
        // beyond the reach the static value stays
        assert_eq!(f.distance(&Point2::new(1.55, 1.05), 2).0, sdf.value(&Point2::new(1.55, 1.05)));
    }
}
