//! Taylor-Hood P2-P1 degree-of-freedom maps.
//!
//! P2 nodes are the mesh vertices (by index) followed by the edges in
//! sorted endpoint order. Velocity dof of node `k`, component `c` is
//! `2k + c`; pressure dofs follow at `n_u + vertex`.

use std::sync::Arc;

use crate::fem::sparse::SparsityPattern;
use crate::geometry::Point;
use crate::mesh::{sorted, Mesh};

/// Local dofs per triangle: 6 nodes x 2 components, then 3 pressures.
pub const LOCAL_DOFS: usize = 15;
pub const LOCAL_VELOCITY_DOFS: usize = 12;

#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    pub edges: Vec<[usize; 2]>,
    /// P2 node indices per triangle in local order v0 v1 v2 e01 e12 e20.
    pub triangle_nodes: Vec<[usize; 6]>,
    pub node_coords: Vec<Point>,
    pub n_u: usize,
    pub n_p: usize,
    pub pattern: Arc<SparsityPattern>,
    /// Value-array positions of the local 15x15 block, row-major.
    pub(crate) local_slots: Vec<[u32; LOCAL_DOFS * LOCAL_DOFS]>,
}

impl Spaces {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_u + self.n_p
    }

    #[inline]
    pub fn velocity_dof(&self, node: usize, component: usize) -> usize {
        2 * node + component
    }

    #[inline]
    pub fn pressure_dof(&self, vertex: usize) -> usize {
        self.n_u + vertex
    }

    /// Node index of the midpoint of edge (a, b).
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edges
            .binary_search(&sorted(a, b))
            .ok()
            .map(|k| self.mesh.num_vertices() + k)
    }

    /// Global dofs of triangle `t` in local order.
    pub fn local_dofs(&self, t: usize) -> [usize; LOCAL_DOFS] {
        let nodes = &self.triangle_nodes[t];
        let verts = &self.mesh.triangles[t];
        let mut dofs = [0; LOCAL_DOFS];
        for (i, &node) in nodes.iter().enumerate() {
            dofs[2 * i] = 2 * node;
            dofs[2 * i + 1] = 2 * node + 1;
        }
        for (j, &v) in verts.iter().enumerate() {
            dofs[LOCAL_VELOCITY_DOFS + j] = self.n_u + v;
        }
        dofs
    }

    /// Velocity coefficients interpolating `f` at the P2 nodes.
    pub fn interpolate_velocity(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        self.node_coords.iter().flat_map(|&p| f(p)).collect()
    }

    /// Pressure coefficients interpolating `f` at the vertices.
    pub fn interpolate_pressure(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(|&p| f(p)).collect()
    }
}

pub fn build_spaces(mesh: Arc<Mesh>) -> Spaces {
    let nv = mesh.num_vertices();
    let edges = mesh.edges();
    let edge_index = |a: usize, b: usize| nv + edges.binary_search(&sorted(a, b)).expect("edge of a mesh triangle");
    let triangle_nodes: Vec<[usize; 6]> = mesh
        .triangles
        .iter()
        .map(|&[a, b, c]| [a, b, c, edge_index(a, b), edge_index(b, c), edge_index(c, a)])
        .collect();
    let mut node_coords = mesh.vertices.clone();
    node_coords.extend(edges.iter().map(|&[a, b]| {
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }));
    let n_u = 2 * node_coords.len();
    let n_p = nv;

    let mut spaces = Spaces {
        mesh,
        edges,
        triangle_nodes,
        node_coords,
        n_u,
        n_p,
        pattern: Arc::new(SparsityPattern::from_entries(0, Vec::new())),
        local_slots: Vec::new(),
    };

    let n = spaces.n_dofs();
    let mut entries = Vec::with_capacity(spaces.mesh.num_triangles() * LOCAL_DOFS * LOCAL_DOFS);
    for t in 0..spaces.mesh.num_triangles() {
        let dofs = spaces.local_dofs(t);
        for &r in &dofs {
            entries.extend(dofs.iter().map(|&c| (r, c)));
        }
    }
    let pattern = SparsityPattern::from_entries(n, entries);
    let local_slots = (0..spaces.mesh.num_triangles())
        .map(|t| {
            let dofs = spaces.local_dofs(t);
            let mut slots = [0u32; LOCAL_DOFS * LOCAL_DOFS];
            for (a, &r) in dofs.iter().enumerate() {
                for (b, &c) in dofs.iter().enumerate() {
                    let k = pattern.find(r, c).expect("local pair in pattern");
                    slots[a * LOCAL_DOFS + b] = u32::try_from(k).expect("pattern fits in u32");
                }
            }
            slots
        })
        .collect();
    spaces.pattern = Arc::new(pattern);
    spaces.local_slots = local_slots;
    spaces
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::mesh::{Facet, FacetTag, FLUID};

    pub(crate) fn reference_triangle() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            regions: vec![FLUID],
            facets: vec![
                Facet { vertices: [0, 1], tag: FacetTag::Wall },
                Facet { vertices: [1, 2], tag: FacetTag::Wall },
                Facet { vertices: [2, 0], tag: FacetTag::Inflow },
            ],
            h_target: 1.0,
        }
    }

    /// Unit square split along the diagonal from (1,0) to (0,1).
    pub(crate) fn two_triangles() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            triangles: vec![[0, 1, 2], [1, 3, 2]],
            regions: vec![FLUID, 1],
            facets: vec![
                Facet { vertices: [0, 1], tag: FacetTag::Wall },
                Facet { vertices: [1, 3], tag: FacetTag::Outflow },
                Facet { vertices: [3, 2], tag: FacetTag::Wall },
                Facet { vertices: [2, 0], tag: FacetTag::Inflow },
            ],
            h_target: 1.5,
        }
    }

    #[test]
    fn single_triangle_counts() {
        let s = build_spaces(Arc::new(reference_triangle()));
        assert_eq!((s.n_u, s.n_p), (12, 3));
        // Edges in sorted order: (0,1), (0,2), (1,2).
        assert_eq!(s.triangle_nodes[0], [0, 1, 2, 3, 5, 4]);
        assert_eq!(s.node_coords[4], [0.0, 0.5]);
        assert_eq!(s.node_coords[5], [0.5, 0.5]);
    }

    #[test]
    fn shared_edge_shares_dofs() {
        let s = build_spaces(Arc::new(two_triangles()));
        assert_eq!((s.n_u, s.n_p), (18, 4));
        let diag = s.edge_node(1, 2).unwrap();
        assert_eq!(s.triangle_nodes[0][4], diag);
        assert_eq!(s.triangle_nodes[1][5], diag);
        assert_eq!(s.node_coords[diag], [0.5, 0.5]);
    }

    #[test]
    fn pattern_covers_local_blocks() {
        let s = build_spaces(Arc::new(two_triangles()));
        // Each triangle couples 15 dofs; the shared edge has 3 nodes (6
        // velocity dofs) and 2 pressures in common.
        let shared = 6 + 2;
        assert_eq!(s.pattern.nnz(), 2 * 15 * 15 - shared * shared);
        for d in 0..s.n_dofs() {
            assert!(s.pattern.find(d, d).is_some());
        }
    }
}
