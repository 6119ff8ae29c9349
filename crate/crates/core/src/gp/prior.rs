//! Constant-velocity Gaussian-process prior between consecutive supports.

use nalgebra::{Matrix2, Matrix4};

use crate::{Error, Result, State};

/// State transition `[[I, dt I], [0, I]]`.
pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut phi = Matrix4::identity();
    phi[(0, 2)] = dt;
    phi[(1, 3)] = dt;
    phi
}

/// Process noise `[[dt^3/3 Qc, dt^2/2 Qc], [dt^2/2 Qc, dt Qc]]` of the
/// white-noise-on-acceleration model.
pub fn process_noise(dt: f64, qc: &Matrix2<f64>) -> Result<Matrix4<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::input(format!("process noise needs dt > 0, got {dt}")));
    }
    let mut q = Matrix4::zeros();
    let blocks = [[dt.powi(3) / 3.0, dt * dt / 2.0], [dt * dt / 2.0, dt]];
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, &s) in row.iter().enumerate() {
            q.fixed_view_mut::<2, 2>(2 * bi, 2 * bj).copy_from(&(qc * s));
        }
    }
    Ok(q)
}

/// Prior residual `theta_{k+1} - Phi theta_k` (no control input).
pub fn gp_prior_residual(theta_k: &State, theta_next: &State, phi: &Matrix4<f64>) -> State {
    theta_next - phi * theta_k
}

/// Prior parameters shared by every interval of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct GpPrior {
    pub qc: Matrix2<f64>,
    pub dt: f64,
    phi: Matrix4<f64>,
    q_inv: Matrix4<f64>,
    whiten: Matrix4<f64>,
}

impl GpPrior {
    pub fn new(qc: Matrix2<f64>, dt: f64) -> Result<Self> {
        let sym = (qc - qc.transpose()).abs().max();
        if sym > 1e-12 * qc.abs().max().max(1.0) || qc.cholesky().is_none() {
            return Err(Error::input("Qc must be symmetric positive definite"));
        }
        let q = process_noise(dt, &qc)?;
        let q_inv = q.try_inverse().ok_or_else(|| Error::input("singular process noise"))?;
        let q_inv = (q_inv + q_inv.transpose()) * 0.5;
        let chol = q_inv.cholesky().ok_or_else(|| Error::input("process noise not positive definite"))?;
        Ok(Self { qc, dt, phi: transition(dt), q_inv, whiten: chol.l().transpose() })
    }

    /// `Qc = qc I`.
    pub fn isotropic(qc: f64, dt: f64) -> Result<Self> {
        Self::new(Matrix2::identity() * qc, dt)
    }

    pub fn phi(&self) -> &Matrix4<f64> {
        &self.phi
    }

    pub fn q_inv(&self) -> &Matrix4<f64> {
        &self.q_inv
    }

    /// `W` with `W^T W = Q^-1`, so `|W r|^2` is the Mahalanobis norm.
    pub fn whitening(&self) -> &Matrix4<f64> {
        &self.whiten
    }

    /// `F_gp = 1/2 sum_k r_k^T Q^-1 r_k` over all intervals.
    pub fn cost(&self, states: &[State]) -> f64 {
        states
            .windows(2)
            .map(|w| {
                let r = gp_prior_residual(&w[0], &w[1], &self.phi);
                0.5 * (r.transpose() * self.q_inv * r)[(0, 0)]
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn transition_closed_form() {
        assert_eq!(transition(0.0), Matrix4::identity());
        let p = transition(0.1);
        assert_eq!(p[(0, 2)], 0.1);
        assert_eq!(p[(1, 3)], 0.1);
        assert_eq!(p[(0, 3)], 0.0);
        assert_relative_eq!(transition(0.3) * transition(0.4), transition(0.7), epsilon = 1e-15);
    }

    #[test]
    fn unit_noise() {
        let q = process_noise(1.0, &Matrix2::identity()).unwrap();
        assert_relative_eq!(q[(0, 0)], 1.0 / 3.0);
        assert_relative_eq!(q[(0, 2)], 0.5);
        assert_relative_eq!(q[(2, 0)], 0.5);
        assert_relative_eq!(q[(2, 2)], 1.0);
        assert_eq!(q[(0, 1)], 0.0);
        assert!(process_noise(0.0, &Matrix2::identity()).is_err());
    }

    #[test]
    fn noise_is_positive_definite() {
        for dt in [0.1, 1.0, 10.0] {
            let q = process_noise(dt, &Matrix2::identity()).unwrap();
            let min = q.symmetric_eigen().eigenvalues.min();
            assert!(min > 0.0, "dt {dt}: {min}");
        }
    }

    #[test]
    fn residual_algebra() {
        let phi = transition(0.5);
        let a = State::new(1.0, 2.0, 0.4, -0.2);
        let b = State::new(1.2, 1.9, 0.4, -0.2);
        assert_relative_eq!(gp_prior_residual(&a, &b, &phi).norm(), 0.0, epsilon = 1e-15);
        let still = State::new(1.0, 2.0, 0.4, -0.2);
        let r = gp_prior_residual(&a, &still, &phi);
        assert_relative_eq!(r, State::new(-0.2, 0.1, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn whitening_reproduces_mahalanobis() {
        let prior = GpPrior::isotropic(0.7, 0.3).unwrap();
        let r = State::new(0.1, -0.4, 0.3, 0.2);
        let m = (r.transpose() * prior.q_inv() * r)[(0, 0)];
        assert_relative_eq!((prior.whitening() * r).norm_squared(), m, max_relative = 1e-10);
    }
}
