//! Sparse direct solves of the constrained Newton systems.
//!
//! Our CSR arrays are read by faer as the CSC storage of the transpose, so
//! the factorization is of `Jᵀ` and solves go through the transposed
//! triangular sweeps.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::{Error, Result};
use crate::fem::sparse::{norm_inf, CsrMatrix, SparsityPattern};
use crate::fem::AssembledSystem;

/// Relative residual the linear solve aims for.
pub const LINEAR_TOLERANCE: f64 = 1e-12;
const MAX_REFINEMENT_STEPS: usize = 3;

/// Outcome of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReport {
    /// `‖J δ + F‖∞ / ‖F‖∞` after refinement.
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

/// Direct solver that keeps the symbolic analysis of one sparsity pattern.
#[derive(Default)]
pub struct LinearSolver {
    symbolic: Option<(Arc<SparsityPattern>, SymbolicLu<usize>)>,
    pub last_report: Option<LinearReport>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns δ with `J δ = -F` for a system after Dirichlet elimination.
    pub fn solve(&mut self, system: &AssembledSystem) -> Result<Vec<f64>> {
        if !system.eliminated {
            return Err(Error::InvalidInput("linear solve needs an eliminated system".into()));
        }
        let rhs: Vec<f64> = system.residual.iter().map(|r| -r).collect();
        let (x, report) = self.solve_matrix(&system.jacobian, &rhs)?;
        self.last_report = Some(report);
        Ok(x)
    }

    /// Solves `a x = b`, refining iteratively towards [`LINEAR_TOLERANCE`].
    pub fn solve_matrix(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearReport)> {
        let n = a.n();
        if b.len() != n {
            return Err(Error::InvalidInput(format!("rhs length {} for a {n}x{n} matrix", b.len())));
        }
        if let Some(i) = a.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite matrix entry at position {i}")));
        }
        let lu = self.factorize(a)?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let mut x = rhs.to_vec();
            lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
            x
        };

        let b_norm = norm_inf(b);
        let mut x = solve(b);
        let residual = |x: &[f64]| -> Vec<f64> {
            a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
        };
        let mut r = residual(&x);
        let mut rel = relative(norm_inf(&r), b_norm);
        let mut steps = 0;
        while rel > LINEAR_TOLERANCE && steps < MAX_REFINEMENT_STEPS {
            let dx = solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            let r_new = residual(&candidate);
            let rel_new = relative(norm_inf(&r_new), b_norm);
            steps += 1;
            if !(rel_new < rel) {
                break;
            }
            x = candidate;
            r = r_new;
            rel = rel_new;
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::LinearSolver(format!(
                "non-finite solution entry at dof {i} (matrix numerically singular)"
            )));
        }
        if rel > LINEAR_TOLERANCE {
            tracing::debug!(relative_residual = rel, "linear solve above target after refinement");
        }
        Ok((
            x,
            LinearReport {
                relative_residual: rel,
                refinement_steps: steps,
            },
        ))
    }

    fn factorize(&mut self, a: &CsrMatrix) -> Result<Lu<usize, f64>> {
        let n = a.n();
        let p = &a.pattern;
        let structure = SymbolicSparseColMatRef::new_checked(n, n, &p.row_ptr, None, &p.col_idx);
        let reuse = matches!(&self.symbolic, Some((cached, _)) if Arc::ptr_eq(cached, p) || **cached == **p);
        if !reuse {
            let sym = SymbolicLu::try_new(structure)
                .map_err(|e| Error::LinearSolver(format!("symbolic analysis failed: {e:?}")))?;
            self.symbolic = Some((p.clone(), sym));
        }
        let sym = self.symbolic.as_ref().expect("symbolic set above").1.clone();
        Lu::try_new_with_symbolic(sym, SparseColMatRef::new(structure, &a.values)).map_err(|e| match e {
            LuError::SymbolicSingular { index } => {
                Error::LinearSolver(format!("singular matrix: no pivot found at elimination step {index}"))
            }
            LuError::Generic(inner) => Error::LinearSolver(format!("factorization failed: {inner:?}")),
        })
    }
}

fn relative(r: f64, b: f64) -> f64 {
    if b > 0.0 {
        r / b
    } else {
        r
    }
}

/// One-shot solve of `J δ = -F`.
pub fn solve_linear(system: &AssembledSystem) -> Result<Vec<f64>> {
    LinearSolver::new().solve(system)
}
