//! Boundary data and Dirichlet constraint sets.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fem::spaces::Spaces;
use crate::fem::VectorField;
use crate::mesh::FacetTag;

/// Parabolic inflow `4U/H^2 y (H - y)`.
pub fn inflow_profile(y: f64, u: f64, height: f64) -> Result<f64> {
    if !(0.0..=height).contains(&y) {
        return Err(Error::Domain(format!("inflow ordinate {y} outside [0, {height}]")));
    }
    Ok(4.0 * u / (height * height) * y * (height - y))
}

#[derive(Debug, Clone)]
pub enum VelocityBoundary {
    /// Parabolic inflow with peak `peak`, no-slip on walls and on interface
    /// facets that bound the mesh, do-nothing outflow.
    Channel { peak: f64, height: f64 },
    /// Prescribed velocity on every boundary facet, outflow included.
    Everywhere(VectorField),
}

#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub velocity: VelocityBoundary,
    /// Optional (vertex, value) pin for problems without a natural outlet.
    pub pressure_pin: Option<(usize, f64)>,
}

impl BoundaryConditions {
    pub fn channel(peak: f64, height: f64) -> Self {
        BoundaryConditions {
            velocity: VelocityBoundary::Channel { peak, height },
            pressure_pin: None,
        }
    }

    pub fn everywhere(data: VectorField, pressure_pin: Option<(usize, f64)>) -> Self {
        BoundaryConditions {
            velocity: VelocityBoundary::Everywhere(data),
            pressure_pin,
        }
    }

    /// Velocity (and optional pressure) constraints on `spaces`.
    ///
    /// Interface facets are constrained only when they lie on the mesh
    /// boundary; inside a penalized channel they are ordinary interior
    /// edges.
    pub fn constraints(&self, spaces: &Spaces) -> Result<Constraints> {
        let mesh = &spaces.mesh;
        let mut out = Constraints::default();
        let boundary_edge = |a: usize, b: usize| -> bool {
            let [a, b] = crate::mesh::sorted(a, b);
            mesh.triangles
                .iter()
                .filter(|tri| tri.contains(&a) && tri.contains(&b))
                .count()
                == 1
        };
        for facet in &mesh.facets {
            let [a, b] = facet.vertices;
            let mid = spaces
                .edge_node(a, b)
                .ok_or_else(|| Error::InvalidInput(format!("facet {a}-{b} is not a mesh edge")))?;
            let value = |node: usize| -> Result<Option<[f64; 2]>> {
                let p = spaces.node_coords[node];
                Ok(match (&self.velocity, facet.tag) {
                    (VelocityBoundary::Everywhere(g), _) => Some(g.eval(p)),
                    (VelocityBoundary::Channel { .. }, FacetTag::Outflow) => None,
                    (VelocityBoundary::Channel { peak, height }, FacetTag::Inflow) => {
                        Some([inflow_profile(p[1], *peak, *height)?, 0.0])
                    }
                    (VelocityBoundary::Channel { .. }, FacetTag::Wall) => Some([0.0, 0.0]),
                    (VelocityBoundary::Channel { .. }, FacetTag::Interface) => {
                        boundary_edge(a, b).then_some([0.0, 0.0])
                    }
                })
            };
            for node in [a, b, mid] {
                if let Some(g) = value(node)? {
                    out.insert(spaces.velocity_dof(node, 0), g[0])?;
                    out.insert(spaces.velocity_dof(node, 1), g[1])?;
                }
            }
        }
        if let Some((vertex, value)) = self.pressure_pin {
            if vertex >= spaces.n_p {
                return Err(Error::InvalidInput(format!("pressure pin vertex {vertex} out of range")));
            }
            out.insert(spaces.pressure_dof(vertex), value)?;
        }
        Ok(out)
    }
}

/// Dirichlet constraint set: dof -> prescribed value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints(BTreeMap<usize, f64>);

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a constraint; a second, different value on the same dof is an error.
    pub fn insert(&mut self, dof: usize, value: f64) -> Result<()> {
        match self.0.insert(dof, value) {
            Some(first) if first != value => Err(Error::ConstraintConflict {
                dof,
                first,
                second: value,
            }),
            _ => Ok(()),
        }
    }

    pub fn get(&self, dof: usize) -> Option<f64> {
        self.0.get(&dof).copied()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.0.contains_key(&dof)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().map(|(&d, &v)| (d, v))
    }

    /// Dense membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &d in self.0.keys() {
            mask[d] = true;
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::spaces::build_spaces;
    use crate::fem::spaces::tests::two_triangles;

    #[test]
    fn profile_values() {
        assert_eq!(inflow_profile(1.0, 100.0, 2.0).unwrap(), 100.0);
        assert_eq!(inflow_profile(0.0, 100.0, 2.0).unwrap(), 0.0);
        assert_eq!(inflow_profile(2.0, 100.0, 2.0).unwrap(), 0.0);
        assert_eq!(inflow_profile(0.5, 100.0, 2.0).unwrap(), 75.0);
        assert!(matches!(inflow_profile(2.1, 100.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(inflow_profile(-1e-9, 100.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn conflicting_values_rejected() {
        let mut c = Constraints::new();
        c.insert(3, 1.0).unwrap();
        c.insert(3, 1.0).unwrap();
        let err = c.insert(3, 2.0).unwrap_err();
        assert!(matches!(err, Error::ConstraintConflict { dof: 3, .. }));
    }

    #[test]
    fn channel_constraints_skip_outflow_and_interior_interface() {
        let mut mesh = two_triangles();
        // Tag the shared diagonal as an interface: it is interior.
        mesh.facets.push(crate::mesh::Facet {
            vertices: [1, 2],
            tag: FacetTag::Interface,
        });
        let s = build_spaces(Arc::new(mesh));
        let c = BoundaryConditions::channel(1.0, 1.0).constraints(&s).unwrap();
        let diag = s.edge_node(1, 2).unwrap();
        assert!(!c.contains(s.velocity_dof(diag, 0)));
        // Outflow midpoint (1, 0.5) is free, inflow midpoint (0, 0.5) carries the peak.
        let out_mid = s.edge_node(1, 3).unwrap();
        assert!(!c.contains(s.velocity_dof(out_mid, 0)));
        let in_mid = s.edge_node(0, 2).unwrap();
        assert_eq!(c.get(s.velocity_dof(in_mid, 0)), Some(1.0));
        // Vertex 3 sits on the top wall.
        assert_eq!(c.get(s.velocity_dof(3, 0)), Some(0.0));
    }
}
