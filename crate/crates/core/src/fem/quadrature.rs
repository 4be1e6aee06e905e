//! Quadrature on the reference triangle `{(x, y): x, y >= 0, x + y <= 1}`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Exactness degree of the rule.
    pub degree: usize,
    /// Reference coordinates (x, y).
    pub points: Vec<[f64; 2]>,
    /// Weights, summing to the reference area 1/2.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of each point.
    pub fn barycentric(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.points.iter().map(|&[x, y]| [1.0 - x - y, x, y])
    }
}

/// Rule exact for all bivariate polynomials of total degree <= `degree`.
///
/// Degree 1 is the centroid rule, degree 2 the three-point interior rule,
/// degrees 3 to 5 share Radon's seven-point rule and degree 6 uses a 4x4
/// collapsed Gauss-Legendre product rule.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let (points, weights) = match degree {
        1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            (vec![[a, a], [b, a], [a, b]], vec![1.0 / 6.0; 3])
        }
        3..=5 => radon_seven_point(),
        6 => collapsed_gauss_4x4(),
        _ => {
            return Err(Error::Config(format!(
                "quadrature degree {degree} unsupported (1..=6)"
            )))
        }
    };
    let degree = match degree {
        3..=5 => 5,
        d => d,
    };
    Ok(QuadratureRule {
        degree,
        points,
        weights,
    })
}

fn radon_seven_point() -> (Vec<[f64; 2]>, Vec<f64>) {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w0 = 9.0 / 80.0;
    let w1 = (155.0 - s15) / 2400.0;
    let w2 = (155.0 + s15) / 2400.0;
    let c = 1.0 / 3.0;
    let points = vec![
        [c, c],
        [a1, a1],
        [1.0 - 2.0 * a1, a1],
        [a1, 1.0 - 2.0 * a1],
        [a2, a2],
        [1.0 - 2.0 * a2, a2],
        [a2, 1.0 - 2.0 * a2],
    ];
    let weights = vec![w0, w1, w1, w1, w2, w2, w2];
    (points, weights)
}

/// Duffy-collapsed product of 4-point Gauss-Legendre rules: exact for
/// degree 7 in the collapsed direction (including the Jacobian) and
/// degree 7 in the other, hence degree 6 on the triangle.
fn collapsed_gauss_4x4() -> (Vec<[f64; 2]>, Vec<f64>) {
    let r = (6.0f64 / 5.0).sqrt();
    let inner = ((3.0 - 2.0 * r) / 7.0).sqrt();
    let outer = ((3.0 + 2.0 * r) / 7.0).sqrt();
    let w_inner = (18.0 + 30f64.sqrt()) / 36.0;
    let w_outer = (18.0 - 30f64.sqrt()) / 36.0;
    // Nodes and weights mapped from [-1, 1] to [0, 1].
    let gauss: [(f64, f64); 4] = [
        (-outer, w_outer),
        (-inner, w_inner),
        (inner, w_inner),
        (outer, w_outer),
    ]
    .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w));
    let mut points = Vec::with_capacity(16);
    let mut weights = Vec::with_capacity(16);
    for &(s, ws) in &gauss {
        for &(t, wt) in &gauss {
            points.push([s, t * (1.0 - s)]);
            weights.push(ws * wt * (1.0 - s));
        }
    }
    (points, weights)
}
