//! Stokes initialization, Newton iteration and penalty continuation.

mod continuation;
pub mod linear;
mod newton;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use continuation::{continuation_solve, default_ladder, interpolate_stage};
pub use linear::{solve_linear, LinearReport, LinearSolver};
pub use newton::{newton_solve, residual_certificate, solve_stokes};

use crate::error::{Error, Result};
use crate::fem::bc::{BoundaryConditions, Constraints};
use crate::fem::{Coefficients, Scheme, Spaces};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Newton stops once the relative residual [`Diagnostics::final_residual_norm`] is at most this.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Explicit (m, n) stages; `None` uses [`default_ladder`].
    pub ladder: Option<Vec<(f64, f64)>>,
    /// Ratio between consecutive stages of the default ladder.
    pub ladder_ratio: f64,
    /// Backtrack on residual growth instead of taking full steps.
    pub damping: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            max_newton_iterations: 50,
            ladder: None,
            ladder_ratio: 1e2,
            damping: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::Config(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.max_newton_iterations == 0 {
            return Err(Error::Config("max_newton_iterations must be at least 1".into()));
        }
        if !(self.ladder_ratio > 1.0 && self.ladder_ratio.is_finite()) {
            return Err(Error::Config(format!("ladder ratio must exceed 1, got {}", self.ladder_ratio)));
        }
        if let Some(ladder) = &self.ladder {
            if ladder.is_empty() {
                return Err(Error::Config("continuation ladder is empty".into()));
            }
            let levels: Vec<f64> = ladder.iter().map(|&(m, n)| m.max(n)).collect();
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(
                    "ladder stages must increase strictly in max(m, n)".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub scheme: Scheme,
    pub m: f64,
    pub n: f64,
    /// Newton updates in the final stage.
    pub newton_iterations: usize,
    /// Newton updates summed over all continuation stages.
    pub total_newton_iterations: usize,
    /// Largest per-stage iteration count.
    pub max_stage_iterations: usize,
    pub stages: usize,
    /// `max_i |F_i(U)| / (residual_scale + (|J(U)| |U|)_i)` at the returned
    /// state: each row is measured against the data and the size of its own
    /// terms, so stiff penalized rows are not held to an absolute accuracy
    /// below their rounding error.
    pub final_residual_norm: f64,
    /// Denominator of the relative residual: the larger of `‖F(U_0)‖∞` and
    /// `‖F(0)‖∞` (the size of the boundary and body-force data).
    pub residual_scale: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Worst relative residual of the linear solves.
    pub max_linear_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn from_state(state: &[f64], n_u: usize, diagnostics: Diagnostics) -> Self {
        Solution {
            velocity: state[..n_u].to_vec(),
            pressure: state[n_u..].to_vec(),
            diagnostics,
        }
    }

    /// Velocity then pressure, as used by assembly.
    pub fn state(&self) -> Vec<f64> {
        let mut s = self.velocity.clone();
        s.extend_from_slice(&self.pressure);
        s
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.iter().chain(&self.pressure).all(|x| x.is_finite())
    }
}

/// A discrete problem: spaces, coefficients and boundary data.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub spaces: Arc<Spaces>,
    pub coeffs: Coefficients,
    pub bcs: BoundaryConditions,
    pub constraints: Constraints,
}

impl FlowProblem {
    pub fn new(spaces: Arc<Spaces>, coeffs: Coefficients, bcs: BoundaryConditions) -> Result<Self> {
        let constraints = bcs.constraints(&spaces)?;
        Ok(FlowProblem {
            spaces,
            coeffs,
            bcs,
            constraints,
        })
    }

    /// Same problem at other penalty values.
    pub fn with_penalty(&self, m: f64, n: f64) -> Result<Self> {
        let mut coeffs = Coefficients::new(self.coeffs.scheme, self.coeffs.nu, m, n)?;
        coeffs.convection = self.coeffs.convection;
        coeffs.body_force = self.coeffs.body_force.clone();
        Ok(FlowProblem {
            coeffs,
            ..self.clone()
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.spaces.n_dofs()
    }
}
