use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_with_constraints, weak_residual};
use crate::fem::sparse::norm_inf;
use crate::fem::{apply_dirichlet, AssembledSystem, Coefficients};
use crate::solver::linear::LinearSolver;
use crate::solver::{Diagnostics, FlowProblem, Solution, SolverConfig};

/// Solves the problem with the convective term dropped; penalty terms stay.
pub fn solve_stokes(problem: &FlowProblem) -> Result<Solution> {
    solve_stokes_with(problem, &mut LinearSolver::new())
}

pub(crate) fn solve_stokes_with(problem: &FlowProblem, solver: &mut LinearSolver) -> Result<Solution> {
    let stokes = FlowProblem {
        coeffs: problem.coeffs.clone().stokes(),
        ..problem.clone()
    };
    let zero = vec![0.0; stokes.n_dofs()];
    let sys = assemble_with_constraints(&stokes.spaces, &stokes.coeffs, &zero, stokes.constraints.clone())?;
    let scale = norm_inf(&sys.residual).max(data_scale(&stokes)?);
    let sys = apply_dirichlet(sys)?;
    let state = solver.solve(&sys)?;
    let final_residual = backward_error(&stokes, &state, scale)?;
    let linear = solver.last_report.as_ref().map_or(0.0, |r| r.relative_residual);
    let diagnostics = Diagnostics {
        scheme: problem.coeffs.scheme,
        m: problem.coeffs.m,
        n: problem.coeffs.n,
        newton_iterations: 1,
        total_newton_iterations: 1,
        max_stage_iterations: 1,
        stages: 1,
        final_residual_norm: final_residual,
        residual_scale: scale,
        residual_history: vec![final_residual],
        converged: true,
        max_linear_residual: linear,
    };
    Ok(Solution::from_state(&state, stokes.spaces.n_u, diagnostics))
}

/// Full-step Newton iteration from `initial`.
///
/// Returns a solution with `converged == false` if the tolerance is not met
/// within the iteration budget; non-finite iterates are an error.
pub fn newton_solve(problem: &FlowProblem, initial: &Solution, config: &SolverConfig) -> Result<Solution> {
    newton_with(problem, initial, config, &mut LinearSolver::new())
}

pub(crate) fn newton_with(
    problem: &FlowProblem,
    initial: &Solution,
    config: &SolverConfig,
    solver: &mut LinearSolver,
) -> Result<Solution> {
    config.validate()?;
    let spaces = &problem.spaces;
    let mut state = initial.state();
    if state.len() != spaces.n_dofs() {
        return Err(Error::InvalidInput(format!(
            "initial guess has {} dofs, problem has {}",
            state.len(),
            spaces.n_dofs()
        )));
    }
    if !initial.is_finite() {
        return Err(Error::Numeric("initial guess is not finite".into()));
    }
    let data = data_scale(problem)?;
    let mut scale = 0.0;
    let mut history = Vec::new();
    let mut max_linear = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let sys = assemble_with_constraints(spaces, &problem.coeffs, &state, problem.constraints.clone())?;
        let r = norm_inf(&sys.residual);
        if iterations == 0 {
            scale = r.max(data);
        }
        let rel = system_backward_error(&sys, &state, scale);
        history.push(rel);
        tracing::debug!(iter = iterations, residual = rel, "iter {iterations} residual {rel:e}");
        if rel <= config.newton_tol {
            converged = true;
            break;
        }
        if iterations == config.max_newton_iterations {
            break;
        }
        let sys = apply_dirichlet(sys)?;
        let delta = solver.solve(&sys).map_err(|e| match e {
            Error::LinearSolver(msg) => Error::LinearSolver(format!("Newton iterate {iterations}: {msg}")),
            other => other,
        })?;
        if let Some(report) = &solver.last_report {
            max_linear = max_linear.max(report.relative_residual);
        }
        let mut step = 1.0;
        let mut next: Vec<f64> = state.iter().zip(&delta).map(|(u, d)| u + d).collect();
        if config.damping {
            while step > 1.0 / 64.0 {
                let trial = norm_inf(&constrained_residual(problem, &next)?);
                if trial.is_finite() && trial < r {
                    break;
                }
                step *= 0.5;
                next = state.iter().zip(&delta).map(|(u, d)| u + step * d).collect();
            }
        }
        iterations += 1;
        if let Some(i) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: iterations,
                message: format!("non-finite value at dof {i}"),
            });
        }
        state = next;
    }

    let diagnostics = Diagnostics {
        scheme: problem.coeffs.scheme,
        m: problem.coeffs.m,
        n: problem.coeffs.n,
        newton_iterations: iterations,
        total_newton_iterations: iterations,
        max_stage_iterations: iterations,
        stages: 1,
        final_residual_norm: *history.last().expect("at least one residual"),
        residual_scale: scale,
        residual_history: history,
        converged,
        max_linear_residual: max_linear,
    };
    if !converged {
        tracing::warn!(
            iterations,
            residual = diagnostics.final_residual_norm,
            "Newton did not reach the tolerance"
        );
    }
    Ok(Solution::from_state(&state, spaces.n_u, diagnostics))
}

/// Re-assembles the relative residual of a returned solution, see
/// [`Diagnostics::final_residual_norm`].
pub fn residual_certificate(problem: &FlowProblem, solution: &Solution) -> Result<f64> {
    backward_error(problem, &solution.state(), solution.diagnostics.residual_scale)
}

fn backward_error(problem: &FlowProblem, state: &[f64], scale: f64) -> Result<f64> {
    let sys = assemble_with_constraints(&problem.spaces, &problem.coeffs, state, problem.constraints.clone())?;
    Ok(system_backward_error(&sys, state, scale))
}

/// `max_i |F_i| / (scale + (|J| |U|)_i)` on an uneliminated system.
fn system_backward_error(sys: &AssembledSystem, state: &[f64], scale: f64) -> f64 {
    sys.residual
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let size: f64 = sys.jacobian.row(i).map(|(j, a)| (a * state[j]).abs()).sum();
            relative(f.abs(), scale + size)
        })
        .fold(0.0, f64::max)
}

/// Residual with Dirichlet rows replaced by `U_i - g_i`.
pub(crate) fn constrained_residual(problem: &FlowProblem, state: &[f64]) -> Result<Vec<f64>> {
    let mut r = weak_residual(&problem.spaces, &problem.coeffs, state)?;
    for (d, g) in problem.constraints.iter() {
        r[d] = state[d] - g;
    }
    Ok(r)
}

/// `‖F(0)‖∞`: the larger of the boundary data and the body-force load.
fn data_scale(problem: &FlowProblem) -> Result<f64> {
    let boundary = problem.constraints.iter().fold(0.0f64, |m, (_, g)| m.max(g.abs()));
    let load = if problem.coeffs.body_force.is_some() {
        let zero = vec![0.0; problem.n_dofs()];
        let coeffs = Coefficients {
            convection: false,
            ..problem.coeffs.clone()
        };
        norm_inf(&weak_residual(&problem.spaces, &coeffs, &zero)?)
    } else {
        0.0
    };
    Ok(boundary.max(load))
}

fn relative(r: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}
