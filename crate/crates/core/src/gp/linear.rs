//! Gauss-Newton linearization and the block-tridiagonal normal equations.

use nalgebra::{DMatrix, DVector, Matrix4};

use super::factors::{linearize_factor, DistanceField, Factor, LinearFactor};
use super::GpPrior;
use crate::{Error, Result, State};

/// Stacked weighted residual blocks at one linearization point.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub blocks: Vec<LinearFactor>,
    pub states: usize,
}

/// Linearizes every factor at `states`.
pub fn linearize(
    factors: &[Factor],
    states: &[State],
    prior: &GpPrior,
    field: Option<&dyn DistanceField>,
) -> Result<Linearization> {
    let n = states.len();
    for f in factors {
        let last = f.first_state() + usize::from(f.is_binary());
        if last >= n {
            return Err(Error::input(format!("factor touches state {last} of {n}")));
        }
    }
    Ok(Linearization { blocks: factors.iter().map(|f| linearize_factor(f, states, prior, field)).collect(), states: n })
}

impl Linearization {
    /// `1/2 |r|^2`, the objective at the linearization point.
    pub fn cost(&self) -> f64 {
        self.blocks.iter().map(LinearFactor::cost).sum()
    }

    /// Dense `(A, b)` with `1/2 |A dx - b|^2` the Gauss-Newton model
    /// (`b = -r`).
    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rows: usize = self.blocks.iter().map(|b| b.rows).sum();
        let mut a = DMatrix::zeros(rows, 4 * self.states);
        let mut b = DVector::zeros(rows);
        let mut row = 0;
        for blk in &self.blocks {
            let cols = if blk.binary { 8 } else { 4 };
            for i in 0..blk.rows {
                for j in 0..cols {
                    a[(row + i, 4 * blk.k + j)] = blk.jac[(i, j)];
                }
                b[row + i] = -blk.residual[i];
            }
            row += blk.rows;
        }
        (a, b)
    }

    /// Normal equations `J^T J`, `J^T r` in block-tridiagonal form.
    pub fn normal_system(&self) -> NormalSystem {
        let n = self.states;
        let mut sys = NormalSystem {
            diag: vec![Matrix4::zeros(); n],
            upper: vec![Matrix4::zeros(); n.saturating_sub(1)],
            grad: vec![State::zeros(); n],
        };
        for blk in &self.blocks {
            let j = blk.jac.rows(0, blk.rows);
            let r = blk.residual.rows(0, blk.rows);
            let j0 = j.fixed_columns::<4>(0);
            sys.diag[blk.k] += j0.transpose() * j0;
            sys.grad[blk.k] += j0.transpose() * r;
            if blk.binary {
                let j1 = j.fixed_columns::<4>(4);
                sys.diag[blk.k + 1] += j1.transpose() * j1;
                sys.upper[blk.k] += j0.transpose() * j1;
                sys.grad[blk.k + 1] += j1.transpose() * r;
            }
        }
        sys
    }
}

/// Symmetric block-tridiagonal system: `diag[k]` is block `(k, k)`,
/// `upper[k]` is block `(k, k+1)`, `grad` is `J^T r`.
#[derive(Clone, Debug)]
pub struct NormalSystem {
    pub diag: Vec<Matrix4<f64>>,
    pub upper: Vec<Matrix4<f64>>,
    pub grad: Vec<State>,
}

impl NormalSystem {
    /// Solves `(H + damping I) dx = -grad` by block Cholesky elimination in
    /// O(N). `None` if a pivot block is not positive definite.
    pub fn solve_damped(&self, damping: f64) -> Option<Vec<State>> {
        let n = self.diag.len();
        let mut pivots = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = self.diag[k] + Matrix4::identity() * damping;
            let mut rhs = -self.grad[k];
            if k > 0 {
                let u = &self.upper[k - 1];
                let prev: &nalgebra::Cholesky<f64, nalgebra::U4> = &pivots[k - 1];
                s -= u.transpose() * prev.solve(u);
                rhs -= u.transpose() * prev.solve(&y[k - 1]);
            }
            let s = (s + s.transpose()) * 0.5;
            pivots.push(s.cholesky()?);
            y.push(rhs);
        }
        let mut dx = vec![State::zeros(); n];
        for k in (0..n).rev() {
            let mut rhs = y[k];
            if k + 1 < n {
                rhs -= self.upper[k] * dx[k + 1];
            }
            dx[k] = pivots[k].solve(&rhs);
        }
        Some(dx)
    }

    /// Dense `H` for checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut h = DMatrix::zeros(4 * n, 4 * n);
        for k in 0..n {
            h.view_mut((4 * k, 4 * k), (4, 4)).copy_from(&self.diag[k]);
            if k + 1 < n {
                h.view_mut((4 * k, 4 * k + 4), (4, 4)).copy_from(&self.upper[k]);
                h.view_mut((4 * k + 4, 4 * k), (4, 4)).copy_from(&self.upper[k].transpose());
            }
        }
        h
    }
}
