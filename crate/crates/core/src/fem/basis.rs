//! Lagrange bases on triangles in barycentric form.
//!
//! Local P2 node order is `v0, v1, v2, e01, e12, e20`; P1 uses the three
//! vertices. Gradients are taken with respect to whatever coordinates the
//! supplied barycentric gradients refer to, so the same code serves the
//! reference and the physical element.

use serde::{Deserialize, Serialize};

pub type Grad = [f64; 2];

/// Gradients of (1 - x - y, x, y) on the reference triangle.
pub const REFERENCE_BARY_GRADS: [Grad; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    P1,
    P2,
}

impl Family {
    pub fn num_nodes(self) -> usize {
        match self {
            Family::P1 => 3,
            Family::P2 => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub ref_grads: Vec<Grad>,
}

/// Values and reference-coordinate gradients at a barycentric point.
pub fn eval_basis(family: Family, bary: [f64; 3]) -> BasisEval {
    debug_assert!(bary.iter().all(|&l| l >= -1e-14), "barycentric coordinates must be nonnegative");
    debug_assert!((bary.iter().sum::<f64>() - 1.0).abs() <= 1e-14, "barycentric coordinates must sum to 1");
    match family {
        Family::P1 => BasisEval {
            values: p1_values(bary).to_vec(),
            ref_grads: REFERENCE_BARY_GRADS.to_vec(),
        },
        Family::P2 => BasisEval {
            values: p2_values(bary).to_vec(),
            ref_grads: p2_grads(bary, &REFERENCE_BARY_GRADS).to_vec(),
        },
    }
}

#[inline]
pub fn p1_values(l: [f64; 3]) -> [f64; 3] {
    l
}

#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

#[inline]
pub fn p2_grads(l: [f64; 3], dl: &[Grad; 3]) -> [Grad; 6] {
    let vertex = |i: usize| {
        let s = 4.0 * l[i] - 1.0;
        [s * dl[i][0], s * dl[i][1]]
    };
    let edge = |i: usize, j: usize| {
        [
            4.0 * (l[i] * dl[j][0] + l[j] * dl[i][0]),
            4.0 * (l[i] * dl[j][1] + l[j] * dl[i][1]),
        ]
    };
    [vertex(0), vertex(1), vertex(2), edge(0, 1), edge(1, 2), edge(2, 0)]
}

/// Physical gradients of the barycentric coordinates and the signed area.
#[inline]
pub fn bary_grads(p: &[[f64; 2]; 3]) -> ([Grad; 3], f64) {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let inv = 1.0 / area2;
    (
        [
            [(p[1][1] - p[2][1]) * inv, (p[2][0] - p[1][0]) * inv],
            [(p[2][1] - p[0][1]) * inv, (p[0][0] - p[2][0]) * inv],
            [(p[0][1] - p[1][1]) * inv, (p[1][0] - p[0][0]) * inv],
        ],
        0.5 * area2,
    )
}

/// Local P2 node positions (vertices then edge midpoints) in barycentric form.
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::quadrature_rule;

    #[test]
    fn p2_is_nodal() {
        for (i, node) in P2_NODES.iter().enumerate() {
            let v = eval_basis(Family::P2, *node).values;
            for (j, &x) in v.iter().enumerate() {
                assert_eq!(x, if i == j { 1.0 } else { 0.0 }, "phi_{j} at node {i}");
            }
        }
    }

    #[test]
    fn p1_at_centroid() {
        let v = eval_basis(Family::P1, [1.0 / 3.0; 3]).values;
        assert_eq!(v, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn partition_of_unity_at_quadrature_points() {
        for degree in 1..=6 {
            for l in quadrature_rule(degree).unwrap().barycentric() {
                for fam in [Family::P1, Family::P2] {
                    let e = eval_basis(fam, l);
                    assert!((e.values.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
                    let gx: f64 = e.ref_grads.iter().map(|g| g[0]).sum();
                    let gy: f64 = e.ref_grads.iter().map(|g| g[1]).sum();
                    assert!(gx.abs() <= 1e-14 && gy.abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Move along reference x: l = (1 - x - y, x, y).
        let (x, y, h) = (0.2, 0.3, 1e-6);
        let at = |x: f64, y: f64| p2_values([1.0 - x - y, x, y]);
        let g = eval_basis(Family::P2, [1.0 - x - y, x, y]).ref_grads;
        for k in 0..6 {
            let dx = (at(x + h, y)[k] - at(x - h, y)[k]) / (2.0 * h);
            let dy = (at(x, y + h)[k] - at(x, y - h)[k]) / (2.0 * h);
            assert!((dx - g[k][0]).abs() < 1e-8 && (dy - g[k][1]).abs() < 1e-8);
        }
    }

    #[test]
    fn physical_bary_gradients_on_reference() {
        let (dl, area) = bary_grads(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(area, 0.5);
        assert_eq!(dl, REFERENCE_BARY_GRADS);
    }
}
