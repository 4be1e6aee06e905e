use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{build_spaces, BoundaryConditions, Coefficients, VectorField};
use crate::geometry::{make_geometry, CaseId, Point, DEFAULT_CIRCLE_SEGMENTS};
use crate::mesh::{generate_mesh, refine_uniform};
use crate::metrics::analytic_errors;
use crate::solver::{newton_solve, solve_stokes, FlowProblem, SolverConfig};

/// Divergence-free velocity/pressure pairs with known forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manufactured {
    /// u = (sin πx sin πy, cos πx cos πy), p = sin πx cos πy.
    Trigonometric,
    /// u = (x, -y), p = 0; exactly representable.
    Linear,
}

impl Manufactured {
    pub fn velocity(self, [x, y]: Point) -> [f64; 2] {
        match self {
            Manufactured::Trigonometric => [(PI * x).sin() * (PI * y).sin(), (PI * x).cos() * (PI * y).cos()],
            Manufactured::Linear => [x, -y],
        }
    }

    /// `g[c][d] = ∂u_c/∂x_d`.
    pub fn gradient(self, [x, y]: Point) -> [[f64; 2]; 2] {
        match self {
            Manufactured::Trigonometric => {
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                [[PI * cx * sy, PI * sx * cy], [-PI * sx * cy, -PI * cx * sy]]
            }
            Manufactured::Linear => [[1.0, 0.0], [0.0, -1.0]],
        }
    }

    pub fn pressure(self, [x, y]: Point) -> f64 {
        match self {
            Manufactured::Trigonometric => (PI * x).sin() * (PI * y).cos(),
            Manufactured::Linear => 0.0,
        }
    }

    /// f = (u·∇)u - νΔu + ∇p.
    pub fn forcing(self, nu: f64) -> VectorField {
        VectorField::new(move |[x, y]| match self {
            Manufactured::Trigonometric => {
                let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
                let lap = 2.0 * PI * PI * nu;
                [
                    PI * sx * cx + lap * sx * sy + PI * cx * cy,
                    -PI * sy * cy + lap * cx * cy - PI * sx * sy,
                ]
            }
            Manufactured::Linear => [x, y],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsConfig {
    pub manufactured: Manufactured,
    pub nu: f64,
    /// Target size of the coarsest mesh; each further level halves it.
    pub base_h: f64,
    pub levels: usize,
    pub solver: SolverConfig,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            manufactured: Manufactured::Trigonometric,
            nu: 1.0,
            base_h: 0.4,
            levels: 4,
            solver: SolverConfig {
                newton_tol: 1e-13,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MmsRow {
    pub level: usize,
    pub h: f64,
    pub triangles: usize,
    pub err_L2: f64,
    pub err_H1semi: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsTable {
    pub manufactured: Manufactured,
    pub rows: Vec<MmsRow>,
    /// Least-squares slopes of log error against log h.
    pub order_l2: Option<f64>,
    pub order_h1: Option<f64>,
}

fn order(rows: &[MmsRow], err: impl Fn(&MmsRow) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), err(r))).filter(|p| p.1 > 0.0).map(|(h, e)| (h, e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Solves the manufactured problem on the plain channel, refined uniformly
/// `levels - 1` times, with full Dirichlet data and the pressure pinned at
/// vertex 0.
pub fn run_mms(config: &MmsConfig) -> Result<MmsTable> {
    if config.levels == 0 {
        return Err(Error::Config("mms needs at least one level".into()));
    }
    if !(config.nu > 0.0 && config.base_h > 0.0) {
        return Err(Error::Config("mms needs positive nu and base_h".into()));
    }
    config.solver.validate()?;
    let sol_kind = config.manufactured;
    let mut mesh = generate_mesh(&make_geometry(CaseId::NoObstacle, DEFAULT_CIRCLE_SEGMENTS)?, config.base_h)?;
    let mut rows = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        let pin = (0, sol_kind.pressure(mesh.vertices[0]));
        let spaces = Arc::new(build_spaces(Arc::new(mesh.clone())));
        let coeffs = Coefficients::real(config.nu)?.with_body_force(sol_kind.forcing(config.nu));
        let bcs = BoundaryConditions::everywhere(VectorField::new(move |p| sol_kind.velocity(p)), Some(pin));
        let problem = FlowProblem::new(spaces.clone(), coeffs, bcs)?;
        let stokes = solve_stokes(&problem)?;
        let sol = newton_solve(&problem, &stokes, &config.solver)?;
        if !sol.diagnostics.converged {
            return Err(Error::Divergence {
                iteration: sol.diagnostics.newton_iterations,
                message: format!(
                    "mms level {level} stopped at relative residual {:e}",
                    sol.diagnostics.final_residual_norm
                ),
            });
        }
        let (err_l2, err_h1) = analytic_errors(&sol.velocity, &spaces, |p| sol_kind.velocity(p), |p| sol_kind.gradient(p))?;
        tracing::info!(level, triangles = mesh.num_triangles(), err_l2, err_h1, "mms level done");
        rows.push(MmsRow {
            level,
            h: config.base_h / 2f64.powi(level as i32),
            triangles: mesh.num_triangles(),
            err_L2: err_l2,
            err_H1semi: err_h1,
            newton_iterations: sol.diagnostics.newton_iterations,
        });
    }
    Ok(MmsTable {
        manufactured: sol_kind,
        order_l2: order(&rows, |r| r.err_L2),
        order_h1: order(&rows, |r| r.err_H1semi),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(kind: Manufactured) {
        let nu = 0.7;
        let eps = 1e-5;
        for p in [[0.3, 0.7], [1.9, 1.2], [3.4, 0.1]] {
            let g = kind.gradient(p);
            let du = |d: usize| {
                let (mut a, mut b) = (p, p);
                a[d] += eps;
                b[d] -= eps;
                let (ua, ub) = (kind.velocity(a), kind.velocity(b));
                [(ua[0] - ub[0]) / (2.0 * eps), (ua[1] - ub[1]) / (2.0 * eps)]
            };
            let (gx, gy) = (du(0), du(1));
            for c in 0..2 {
                assert!((g[c][0] - gx[c]).abs() < 1e-8);
                assert!((g[c][1] - gy[c]).abs() < 1e-8);
            }
            assert!((g[0][0] + g[1][1]).abs() < 1e-12, "divergence-free");
            // Forcing against finite differences of the strong operator.
            let u = kind.velocity(p);
            let lap = |c: usize| {
                let h = 1e-4;
                let f = |q: Point| kind.velocity(q)[c];
                (f([p[0] + h, p[1]]) + f([p[0] - h, p[1]]) + f([p[0], p[1] + h]) + f([p[0], p[1] - h]) - 4.0 * f(p)) / (h * h)
            };
            let dp = |d: usize| {
                let (mut a, mut b) = (p, p);
                a[d] += eps;
                b[d] -= eps;
                (kind.pressure(a) - kind.pressure(b)) / (2.0 * eps)
            };
            let f = kind.forcing(nu).eval(p);
            for c in 0..2 {
                let expect = u[0] * g[c][0] + u[1] * g[c][1] - nu * lap(c) + dp(c);
                assert!((f[c] - expect).abs() < 1e-5, "{kind:?} {p:?} {c}: {} vs {expect}", f[c]);
            }
        }
    }

    #[test]
    fn manufactured_fields_are_consistent() {
        fd_check(Manufactured::Trigonometric);
        fd_check(Manufactured::Linear);
    }

    #[test]
    fn linear_solution_is_reproduced_exactly() {
        let table = run_mms(&MmsConfig {
            manufactured: Manufactured::Linear,
            base_h: 0.5,
            levels: 2,
            ..MmsConfig::default()
        })
        .unwrap();
        for r in &table.rows {
            assert!(r.err_L2 < 1e-12 && r.err_H1semi < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn zero_levels_rejected() {
        let c = MmsConfig {
            levels: 0,
            ..MmsConfig::default()
        };
        assert!(matches!(run_mms(&c), Err(Error::Config(_))));
    }
}
