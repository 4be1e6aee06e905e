//! Residual and Newton Jacobian of the penalized Navier-Stokes weak form
//!
//! ```text
//! F_u(v) = ∫ (u·∇)u·v + μ ∇u:∇v + η u·v − p div v − f·v
//! F_p(q) = −∫ q div u
//! ```
//!
//! with μ, η piecewise constant on the triangle regions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::basis::{bary_grads, p2_grads, p2_values};
use crate::fem::bc::{BoundaryConditions, Constraints};
use crate::fem::quadrature::{quadrature_rule, QuadratureRule};
use crate::fem::sparse::CsrMatrix;
use crate::fem::spaces::{Spaces, LOCAL_DOFS, LOCAL_VELOCITY_DOFS};
use crate::fem::VectorField;
use crate::mesh::FLUID;

/// Degree of the rule used for every volume term.
pub const ASSEMBLY_QUADRATURE_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Real,
    Volume,
    Viscosity,
    Mixed,
}

impl Scheme {
    pub const PENALIZED: [Scheme; 3] = [Scheme::Volume, Scheme::Viscosity, Scheme::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Real => "real",
            Scheme::Volume => "volume",
            Scheme::Viscosity => "viscosity",
            Scheme::Mixed => "mixed",
        }
    }

    /// The penalty that drives the scheme: n for Volume, m otherwise.
    pub fn active_parameter(self, m: f64, n: f64) -> f64 {
        match self {
            Scheme::Volume => n,
            _ => m,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(Scheme::Real),
            "volume" => Ok(Scheme::Volume),
            "viscosity" => Ok(Scheme::Viscosity),
            "mixed" => Ok(Scheme::Mixed),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Physical and penalty coefficients of one problem variant.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub scheme: Scheme,
    pub nu: f64,
    pub m: f64,
    pub n: f64,
    /// Assemble the convective term; off for Stokes solves.
    pub convection: bool,
    pub body_force: Option<VectorField>,
}

impl Coefficients {
    /// Validated coefficients; `m` must be 1 for Real/Volume, `n` 0 for
    /// Real/Viscosity.
    pub fn new(scheme: Scheme, nu: f64, m: f64, n: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
        }
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::Config(format!("viscosity penalty m must be >= 1, got {m}")));
        }
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::Config(format!("volume penalty n must be >= 0, got {n}")));
        }
        let (uses_m, uses_n) = match scheme {
            Scheme::Real => (false, false),
            Scheme::Volume => (false, true),
            Scheme::Viscosity => (true, false),
            Scheme::Mixed => (true, true),
        };
        if !uses_m && m != 1.0 {
            return Err(Error::Config(format!("{scheme} scheme requires m = 1, got {m}")));
        }
        if !uses_n && n != 0.0 {
            return Err(Error::Config(format!("{scheme} scheme requires n = 0, got {n}")));
        }
        Ok(Coefficients {
            scheme,
            nu,
            m,
            n,
            convection: true,
            body_force: None,
        })
    }

    pub fn real(nu: f64) -> Result<Self> {
        Self::new(Scheme::Real, nu, 1.0, 0.0)
    }

    pub fn stokes(mut self) -> Self {
        self.convection = false;
        self
    }

    pub fn with_body_force(mut self, f: VectorField) -> Self {
        self.body_force = Some(f);
        self
    }

    #[inline]
    pub fn mu(&self, region: u32) -> f64 {
        match self.scheme {
            Scheme::Viscosity | Scheme::Mixed if region != FLUID => self.m * self.nu,
            _ => self.nu,
        }
    }

    #[inline]
    pub fn eta(&self, region: u32) -> f64 {
        match self.scheme {
            Scheme::Volume | Scheme::Mixed if region != FLUID => self.n,
            _ => 0.0,
        }
    }
}

/// Residual and Jacobian at one state.
///
/// Before [`apply_dirichlet`], constrained rows read `U_i - g_i` with identity
/// Jacobian rows. Afterwards the constrained columns are eliminated as well
/// and `residual` is the right-hand side of the Newton correction system
/// `J δ = -residual`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub jacobian: CsrMatrix,
    pub constraints: Constraints,
    pub n_u: usize,
    pub eliminated: bool,
}

pub fn assemble_system(
    spaces: &Spaces,
    coeffs: &Coefficients,
    state: &[f64],
    bcs: &BoundaryConditions,
) -> Result<AssembledSystem> {
    let constraints = bcs.constraints(spaces)?;
    assemble_with_constraints(spaces, coeffs, state, constraints)
}

/// As [`assemble_system`] with a precomputed constraint set.
pub fn assemble_with_constraints(
    spaces: &Spaces,
    coeffs: &Coefficients,
    state: &[f64],
    constraints: Constraints,
) -> Result<AssembledSystem> {
    let (mut residual, jacobian) = assemble_unconstrained(spaces, coeffs, state, true)?;
    let mut jac = jacobian.expect("jacobian requested");
    for (d, g) in constraints.iter() {
        if d >= spaces.n_dofs() {
            return Err(Error::InvalidInput(format!("constraint on dof {d} out of range")));
        }
        residual[d] = state[d] - g;
        let (start, end) = (jac.pattern.row_ptr[d], jac.pattern.row_ptr[d + 1]);
        for k in start..end {
            jac.values[k] = if jac.pattern.col_idx[k] == d { 1.0 } else { 0.0 };
        }
    }
    Ok(AssembledSystem {
        residual,
        jacobian: jac,
        constraints,
        n_u: spaces.n_u,
        eliminated: false,
    })
}

/// Galerkin residual at `state` with no Dirichlet rows replaced.
pub fn weak_residual(spaces: &Spaces, coeffs: &Coefficients, state: &[f64]) -> Result<Vec<f64>> {
    Ok(assemble_unconstrained(spaces, coeffs, state, false)?.0)
}

fn assemble_unconstrained(
    spaces: &Spaces,
    coeffs: &Coefficients,
    state: &[f64],
    with_jacobian: bool,
) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
    if state.len() != spaces.n_dofs() {
        return Err(Error::InvalidInput(format!(
            "state has length {}, spaces need {}",
            state.len(),
            spaces.n_dofs()
        )));
    }
    if let Some(i) = state.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite state entry at dof {i}")));
    }
    let rule = quadrature_rule(ASSEMBLY_QUADRATURE_DEGREE)?;
    let nt = spaces.mesh.num_triangles();
    // Element work in parallel, accumulation in triangle order.
    let locals: Vec<ElementContribution> = (0..nt)
        .into_par_iter()
        .with_min_len(256)
        .map(|t| element(spaces, coeffs, &rule, t, state, with_jacobian))
        .collect();

    let mut residual = vec![0.0; spaces.n_dofs()];
    let mut jacobian = with_jacobian.then(|| CsrMatrix::zeros(spaces.pattern.clone()));
    for (t, local) in locals.iter().enumerate() {
        let dofs = spaces.local_dofs(t);
        for (a, &d) in dofs.iter().enumerate() {
            residual[d] += local.residual[a];
        }
        if let Some(jac) = jacobian.as_mut() {
            for (slot, v) in spaces.local_slots[t].iter().zip(local.jacobian.iter()) {
                jac.values[*slot as usize] += v;
            }
        }
    }
    Ok((residual, jacobian))
}

struct ElementContribution {
    residual: [f64; LOCAL_DOFS],
    jacobian: Box<[f64; LOCAL_DOFS * LOCAL_DOFS]>,
}

fn element(
    spaces: &Spaces,
    coeffs: &Coefficients,
    rule: &QuadratureRule,
    t: usize,
    state: &[f64],
    with_jacobian: bool,
) -> ElementContribution {
    let mesh = &spaces.mesh;
    let pts = mesh.triangle_points(t);
    let (dl, area) = bary_grads(&pts);
    let region = mesh.regions[t];
    let (mu, eta) = (coeffs.mu(region), coeffs.eta(region));
    let dofs = spaces.local_dofs(t);
    let uloc: [[f64; 2]; 6] = std::array::from_fn(|i| [state[dofs[2 * i]], state[dofs[2 * i + 1]]]);
    let ploc: [f64; 3] = std::array::from_fn(|j| state[dofs[LOCAL_VELOCITY_DOFS + j]]);

    let mut res = [0.0; LOCAL_DOFS];
    let mut jac = Box::new([0.0; LOCAL_DOFS * LOCAL_DOFS]);
    const P: usize = LOCAL_VELOCITY_DOFS;

    for (l, &w_ref) in rule.barycentric().zip(&rule.weights) {
        let w = 2.0 * area * w_ref;
        let phi = p2_values(l);
        let gphi = p2_grads(l, &dl);
        let psi = l;

        let mut u = [0.0; 2];
        let mut g = [[0.0; 2]; 2]; // g[c][e] = ∂_e u_c
        for k in 0..6 {
            for c in 0..2 {
                u[c] += uloc[k][c] * phi[k];
                g[c][0] += uloc[k][c] * gphi[k][0];
                g[c][1] += uloc[k][c] * gphi[k][1];
            }
        }
        let p: f64 = (0..3).map(|j| ploc[j] * psi[j]).sum();
        let div = g[0][0] + g[1][1];
        let conv = if coeffs.convection {
            [u[0] * g[0][0] + u[1] * g[0][1], u[0] * g[1][0] + u[1] * g[1][1]]
        } else {
            [0.0; 2]
        };
        let f = match &coeffs.body_force {
            Some(field) => {
                let x = [
                    l[0] * pts[0][0] + l[1] * pts[1][0] + l[2] * pts[2][0],
                    l[0] * pts[0][1] + l[1] * pts[1][1] + l[2] * pts[2][1],
                ];
                field.eval(x)
            }
            None => [0.0; 2],
        };

        for i in 0..6 {
            for c in 0..2 {
                res[2 * i + c] += w
                    * ((conv[c] + eta * u[c] - f[c]) * phi[i]
                        + mu * (g[c][0] * gphi[i][0] + g[c][1] * gphi[i][1])
                        - p * gphi[i][c]);
            }
        }
        for j in 0..3 {
            res[P + j] -= w * psi[j] * div;
        }

        if !with_jacobian {
            continue;
        }
        // u·∇φ_k for the convective linearization.
        let adv: [f64; 6] = std::array::from_fn(|k| u[0] * gphi[k][0] + u[1] * gphi[k][1]);
        for i in 0..6 {
            for k in 0..6 {
                let lap = mu * (gphi[k][0] * gphi[i][0] + gphi[k][1] * gphi[i][1]) + eta * phi[k] * phi[i];
                for c in 0..2 {
                    let row = (2 * i + c) * LOCAL_DOFS;
                    for e in 0..2 {
                        let mut v = if c == e { lap } else { 0.0 };
                        if coeffs.convection {
                            v += phi[i] * (phi[k] * g[c][e] + if c == e { adv[k] } else { 0.0 });
                        }
                        jac[row + 2 * k + e] += w * v;
                    }
                }
            }
            for j in 0..3 {
                for c in 0..2 {
                    let b = w * psi[j] * gphi[i][c];
                    jac[(2 * i + c) * LOCAL_DOFS + P + j] -= b;
                    jac[(P + j) * LOCAL_DOFS + 2 * i + c] -= b;
                }
            }
        }
    }
    ElementContribution { residual: res, jacobian: jac }
}

/// Symmetric elimination of the constrained columns.
///
/// Rows of constrained dofs already are identity rows; their columns are
/// zeroed in the unconstrained rows and the known corrections moved to the
/// right-hand side, so that `J δ = -F` keeps its solution.
pub fn apply_dirichlet(mut system: AssembledSystem) -> Result<AssembledSystem> {
    if system.eliminated || system.constraints.is_empty() {
        system.eliminated = true;
        return Ok(system);
    }
    let n = system.jacobian.n();
    let mask = system.constraints.mask(n);
    let jac = &mut system.jacobian;
    let pattern = jac.pattern.clone();
    for row in (0..n).filter(|&r| !mask[r]) {
        for k in pattern.row_ptr[row]..pattern.row_ptr[row + 1] {
            let col = pattern.col_idx[k];
            if mask[col] {
                system.residual[row] -= jac.values[k] * system.residual[col];
                jac.values[k] = 0.0;
            }
        }
    }
    system.eliminated = true;
    Ok(system)
}
