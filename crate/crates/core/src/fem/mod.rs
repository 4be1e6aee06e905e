//! Taylor-Hood P2-P1 discretization.

pub mod assembly;
pub mod basis;
pub mod bc;
pub mod quadrature;
pub mod sparse;
pub mod spaces;

use std::fmt;
use std::sync::Arc;

pub use assembly::{apply_dirichlet, assemble_system, AssembledSystem, Coefficients, Scheme};
pub use basis::{eval_basis, BasisEval, Family};
pub use bc::{inflow_profile, BoundaryConditions, Constraints};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use sparse::{CsrMatrix, SparsityPattern};
pub use spaces::{build_spaces, Spaces};

use crate::geometry::Point;

/// Shared vector-valued function of position, used for body forces and
/// boundary data of manufactured problems.
#[derive(Clone)]
pub struct VectorField(Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>);

impl VectorField {
    pub fn new(f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorField(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, p: Point) -> [f64; 2] {
        (self.0)(p)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField(..)")
    }
}
