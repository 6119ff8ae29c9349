//! Levenberg-Marquardt MAP solver.

use super::factors::{DistanceField, Factor};
use super::linear::linearize;
use super::GpPrior;
use crate::{Error, Result, State};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Iteration cap `IterN` (accepted and rejected steps both count).
    pub max_iterations: usize,
    /// Stop once the relative error decrease of an accepted step drops below this.
    pub rel_tol: f64,
    /// Stop once an accepted step is shorter than this.
    pub step_tol: f64,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Give up when damping grows past this.
    pub lambda_max: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tol: 1e-4,
            step_tol: 1e-6,
            lambda_init: 1e-2,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e10,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be at least 1"));
        }
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("lambda_init", self.lambda_init),
            ("lambda_up", self.lambda_up),
            ("lambda_down", self.lambda_down),
            ("lambda_max", self.lambda_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.step_tol >= 0.0) {
            return Err(Error::input("step_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Stopping rule checked after each accepted step.
pub fn convergence(step_norm: f64, iteration: usize, err: f64, prev_err: f64, params: &SolverParams) -> bool {
    step_norm < params.step_tol
        || (prev_err - err) / prev_err.max(1e-300) < params.rel_tol
        || iteration >= params.max_iterations
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub states: Vec<State>,
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
    /// Error after each accepted step, starting with the initial error.
    pub accepted_errors: Vec<f64>,
    /// `false` when the damping cap was hit before any stopping rule fired.
    pub converged: bool,
}

/// Minimizes `1/2 sum |r_f|^2` over `factors` starting from `init`.
pub fn solve_lm(
    factors: &[Factor],
    init: &[State],
    prior: &GpPrior,
    field: Option<&dyn DistanceField>,
    params: &SolverParams,
) -> Result<SolveReport> {
    params.validate()?;
    let mut states = init.to_vec();
    let mut lin = linearize(factors, &states, prior, field)?;
    let mut err = lin.cost();
    if !err.is_finite() {
        return Err(Error::Solver(format!("initial error is {err}")));
    }
    let initial_error = err;
    let mut accepted_errors = vec![err];
    let mut lambda = params.lambda_init;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        let sys = lin.normal_system();
        let Some(dx) = sys.solve_damped(lambda) else {
            lambda *= params.lambda_up;
            if lambda > params.lambda_max {
                break;
            }
            continue;
        };
        let step_norm = dx.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt();
        if !step_norm.is_finite() {
            return Err(Error::Solver(format!("non-finite step at iteration {iterations}, damping {lambda:e}")));
        }
        let candidate: Vec<State> = states.iter().zip(&dx).map(|(s, d)| s + d).collect();
        let cand_lin = linearize(factors, &candidate, prior, field)?;
        let cand_err = cand_lin.cost();
        if !cand_err.is_finite() {
            return Err(Error::Solver(format!(
                "error became {cand_err} at iteration {iterations} (previous {err:e}, damping {lambda:e})"
            )));
        }
        if cand_err < err {
            let prev = err;
            states = candidate;
            lin = cand_lin;
            err = cand_err;
            accepted_errors.push(err);
            lambda = (lambda / params.lambda_down).max(1e-12);
            if convergence(step_norm, iterations, err, prev, params) {
                converged = true;
                break;
            }
        } else {
            if step_norm < params.step_tol {
                converged = true;
                break;
            }
            lambda *= params.lambda_up;
            if lambda > params.lambda_max {
                break;
            }
        }
    }
    if iterations >= params.max_iterations {
        converged = true;
    }
    Ok(SolveReport { states, iterations, initial_error, final_error: err, accepted_errors, converged })
}
