use crate::error::{Error, Result};
use crate::solver::linear::LinearSolver;
use crate::solver::newton::{newton_with, solve_stokes_with};
use crate::solver::{FlowProblem, Solution, SolverConfig};

/// Stage with max(m, n) lowered to `level`, both penalties scaled on the
/// same logarithmic fraction of their target.
pub fn interpolate_stage(m: f64, n: f64, level: f64) -> (f64, f64) {
    let top = m.max(n);
    if level >= top || top <= 1.0 {
        return (m, n);
    }
    let s = level.ln() / top.ln();
    let scale = |p: f64| if p <= 1.0 { p } else { p.powf(s) };
    (scale(m), scale(n))
}

/// Stages at max(m, n) = ratio, ratio², ... below the target, then the target.
pub fn default_ladder(m: f64, n: f64, ratio: f64) -> Vec<(f64, f64)> {
    let top = m.max(n);
    let mut ladder = Vec::new();
    let mut level = ratio;
    while level < top * (1.0 - 1e-12) {
        ladder.push(interpolate_stage(m, n, level));
        level *= ratio;
    }
    ladder.push((m, n));
    ladder
}

/// Solves the ladder of penalty stages ending at the problem's (m, n), each
/// stage warm-started from the previous one; the first starts from a Stokes
/// solve.
pub fn continuation_solve(problem: &FlowProblem, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let (m, n) = (problem.coeffs.m, problem.coeffs.n);
    let ladder = match &config.ladder {
        Some(l) => l.clone(),
        None => default_ladder(m, n, config.ladder_ratio),
    };
    if ladder.last() != Some(&(m, n)) {
        return Err(Error::Config(format!(
            "continuation ladder must end at the target (m, n) = ({m:e}, {n:e})"
        )));
    }
    let mut solver = LinearSolver::new();
    let mut previous: Option<Solution> = None;
    let mut total = 0;
    let mut max_stage = 0;
    let mut max_linear = 0.0f64;
    for (stage, &(sm, sn)) in ladder.iter().enumerate() {
        let fail = |message: String, last: &Option<Solution>| Error::StageFailure {
            stage,
            m: sm,
            n: sn,
            message,
            last_converged: last.clone().map(Box::new),
        };
        let stage_problem = problem.with_penalty(sm, sn).map_err(|e| fail(e.to_string(), &previous))?;
        let start = match &previous {
            Some(s) => s.clone(),
            None => solve_stokes_with(&stage_problem, &mut solver).map_err(|e| fail(e.to_string(), &None))?,
        };
        let sol = newton_with(&stage_problem, &start, config, &mut solver).map_err(|e| fail(e.to_string(), &previous))?;
        total += sol.diagnostics.newton_iterations;
        max_stage = max_stage.max(sol.diagnostics.newton_iterations);
        max_linear = max_linear.max(sol.diagnostics.max_linear_residual);
        tracing::debug!(stage, m = sm, n = sn, iterations = sol.diagnostics.newton_iterations, "continuation stage done");
        if !sol.diagnostics.converged {
            return Err(fail(
                format!(
                    "Newton stopped after {} iterations at relative residual {:e}",
                    sol.diagnostics.newton_iterations, sol.diagnostics.final_residual_norm
                ),
                &previous,
            ));
        }
        previous = Some(sol);
    }
    let mut sol = previous.expect("ladder is not empty");
    sol.diagnostics.total_newton_iterations = total;
    sol.diagnostics.max_stage_iterations = max_stage;
    sol.diagnostics.stages = ladder.len();
    sol.diagnostics.max_linear_residual = max_linear;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_steps_geometrically_to_target() {
        let l = default_ladder(1e8, 1e10, 1e2);
        assert_eq!(l.len(), 5);
        assert_eq!(*l.last().unwrap(), (1e8, 1e10));
        let levels: Vec<f64> = l.iter().map(|&(m, n)| m.max(n)).collect();
        for (k, level) in levels.iter().enumerate() {
            assert!((level.log10() - 2.0 * (k as f64 + 1.0)).abs() < 1e-9);
        }
        // m follows n on the same log fraction: m = n^0.8 here.
        assert!((l[0].0.log10() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn single_parameter_ladders_keep_the_other_fixed() {
        for (m, n) in default_ladder(1e6, 0.0, 1e2) {
            assert_eq!(n, 0.0);
            assert!(m >= 1e2);
        }
        for (m, n) in default_ladder(1.0, 1e5, 1e2) {
            assert_eq!(m, 1.0);
            assert!(n >= 1e2);
        }
        assert_eq!(default_ladder(10.0, 0.0, 1e2), vec![(10.0, 0.0)]);
        assert_eq!(default_ladder(1e2, 0.0, 1e2), vec![(1e2, 0.0)]);
    }
}
