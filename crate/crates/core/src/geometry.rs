//! Channel-with-obstacle geometries.
//!
//! Every case lives in the channel `[0, L] x [0, H]` with `L = 4`, `H = 2`.
//! Obstacles are closed, counterclockwise polygons; curved boundaries are
//! replaced by inscribed regular polygons so that meshes can follow them
//! exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub const CHANNEL_LENGTH: f64 = 4.0;
pub const CHANNEL_HEIGHT: f64 = 2.0;
pub const DEFAULT_CIRCLE_SEGMENTS: usize = 64;

/// Center and radius of the immersed disk in the two-obstacle case.
///
/// The source geometry writes the disk as `(x - 3)^2 + (x - 1.5)^2 = 0.3^2`;
/// the repeated `x` is read as `y`, giving a disk inside the channel.
pub const IMMERSED_DISK_CENTER: Point = [3.0, 1.5];
pub const IMMERSED_DISK_RADIUS: f64 = 0.3;

/// Box-shaped constriction attached to the channel floor.
pub const BOX_WALL_OBSTACLE: [Point; 4] = [[0.9, 0.0], [1.1, 0.0], [1.1, 0.6], [0.9, 0.6]];

/// Stepped "tower" obstacle on the floor with eight reflex corners and a
/// pointed apex at (1.5, 1.2). Counterclockwise, mirror symmetric about x = 1.5.
pub const SHARP_CORNER_OBSTACLE: [Point; 19] = [
    [1.4, 0.0],
    [1.6, 0.0],
    [1.6, 0.3],
    [1.75, 0.3],
    [1.75, 0.45],
    [1.6, 0.45],
    [1.6, 0.75],
    [1.7, 0.75],
    [1.7, 0.9],
    [1.58, 0.9],
    [1.5, 1.2],
    [1.42, 0.9],
    [1.3, 0.9],
    [1.3, 0.75],
    [1.4, 0.75],
    [1.4, 0.45],
    [1.25, 0.45],
    [1.25, 0.3],
    [1.4, 0.3],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    BoxWall,
    SharpCorner,
    TwoObstacles,
    NoObstacle,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::BoxWall,
        CaseId::SharpCorner,
        CaseId::TwoObstacles,
        CaseId::NoObstacle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::BoxWall => "box_wall",
            CaseId::SharpCorner => "sharp_corner",
            CaseId::TwoObstacles => "two_obstacles",
            CaseId::NoObstacle => "no_obstacle",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == key || c.as_str().replace('_', "") == key)
            .ok_or_else(|| Error::Config(format!("unknown geometry case `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Region id carried by the triangles of this obstacle (>= 1).
    pub id: u32,
    /// Counterclockwise polygon, first vertex not repeated.
    pub vertices: Vec<Point>,
}

impl Obstacle {
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub length: f64,
    pub height: f64,
    pub obstacles: Vec<Obstacle>,
    pub case_id: CaseId,
}

/// Builds one of the study geometries.
pub fn make_geometry(case_id: CaseId, circle_segments: usize) -> Result<Geometry> {
    let mut obstacles = Vec::new();
    match case_id {
        CaseId::NoObstacle => {}
        CaseId::BoxWall => obstacles.push(Obstacle {
            id: 1,
            vertices: BOX_WALL_OBSTACLE.to_vec(),
        }),
        CaseId::SharpCorner => obstacles.push(Obstacle {
            id: 1,
            vertices: SHARP_CORNER_OBSTACLE.to_vec(),
        }),
        CaseId::TwoObstacles => {
            if circle_segments < 12 {
                return Err(Error::Config(format!(
                    "circle_segments must be >= 12 for two_obstacles, got {circle_segments}"
                )));
            }
            obstacles.push(Obstacle {
                id: 1,
                vertices: BOX_WALL_OBSTACLE.to_vec(),
            });
            obstacles.push(Obstacle {
                id: 2,
                vertices: regular_polygon(IMMERSED_DISK_CENTER, IMMERSED_DISK_RADIUS, circle_segments),
            });
        }
    }
    let geometry = Geometry {
        length: CHANNEL_LENGTH,
        height: CHANNEL_HEIGHT,
        obstacles,
        case_id,
    };
    geometry.validate()?;
    Ok(geometry)
}

/// Inscribed regular polygon, counterclockwise, starting at angle 0.
pub fn regular_polygon(center: Point, radius: f64, segments: usize) -> Vec<Point> {
    (0..segments)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / segments as f64;
            [
                center[0] + radius * theta.cos(),
                center[1] + radius * theta.sin(),
            ]
        })
        .collect()
}

impl Geometry {
    pub fn area(&self) -> f64 {
        self.length * self.height
    }

    pub fn solid_area(&self) -> f64 {
        self.obstacles.iter().map(|o| o.signed_area()).sum()
    }

    /// Id of the obstacle containing `p`, or 0 for the fluid.
    pub fn region_of(&self, p: Point) -> u32 {
        self.obstacles
            .iter()
            .find(|o| o.contains(p))
            .map_or(0, |o| o.id)
    }

    /// True when `p` lies on the channel boundary (within `tol`).
    pub fn on_channel_boundary(&self, p: Point, tol: f64) -> bool {
        p[0].abs() <= tol
            || (p[0] - self.length).abs() <= tol
            || p[1].abs() <= tol
            || (p[1] - self.height).abs() <= tol
    }

    /// True when the segment a-b lies on the channel boundary.
    pub fn segment_on_channel_boundary(&self, a: Point, b: Point) -> bool {
        let tol = 1e-12 * self.length.max(self.height);
        let same = |u: f64, v: f64, w: f64| (u - w).abs() <= tol && (v - w).abs() <= tol;
        same(a[0], b[0], 0.0)
            || same(a[0], b[0], self.length)
            || same(a[1], b[1], 0.0)
            || same(a[1], b[1], self.height)
    }

    /// Checks positivity, containment, simplicity and disjointness.
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.height > 0.0) {
            return Err(Error::Config(format!(
                "channel dimensions must be positive, got L = {}, H = {}",
                self.length, self.height
            )));
        }
        let tol = 1e-12 * self.length.max(self.height);
        for o in &self.obstacles {
            if o.id == 0 {
                return Err(Error::Config("obstacle region ids must be >= 1".into()));
            }
            if o.vertices.len() < 3 {
                return Err(Error::Config(format!("obstacle {} has fewer than 3 vertices", o.id)));
            }
            if o.signed_area() <= 0.0 {
                return Err(Error::Config(format!("obstacle {} is not counterclockwise", o.id)));
            }
            for v in &o.vertices {
                if v[0] < -tol || v[0] > self.length + tol || v[1] < -tol || v[1] > self.height + tol {
                    return Err(Error::Config(format!(
                        "obstacle {} vertex ({}, {}) lies outside the channel",
                        o.id, v[0], v[1]
                    )));
                }
            }
            let edges: Vec<_> = o.edges().collect();
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    let adjacent = j == i + 1 || (i == 0 && j == edges.len() - 1);
                    if !adjacent && segments_intersect(edges[i], edges[j]) {
                        return Err(Error::Config(format!(
                            "obstacle {} is self-intersecting (edges {i} and {j})",
                            o.id
                        )));
                    }
                }
            }
        }
        for (a_idx, a) in self.obstacles.iter().enumerate() {
            for b in &self.obstacles[a_idx + 1..] {
                if a.id == b.id {
                    return Err(Error::Config(format!("duplicate obstacle id {}", a.id)));
                }
                let crossing = a
                    .edges()
                    .any(|ea| b.edges().any(|eb| segments_intersect(ea, eb)));
                let nested = a.vertices.iter().any(|&p| b.contains(p))
                    || b.vertices.iter().any(|&p| a.contains(p));
                if crossing || nested {
                    return Err(Error::Config(format!(
                        "obstacles {} and {} overlap",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn polygon_signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Crossing-number test; points on the boundary may go either way.
pub fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(s: (Point, Point), t: (Point, Point)) -> bool {
    let (a, b) = s;
    let (c, d) = t;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_wall_has_the_constriction() {
        let g = make_geometry(CaseId::BoxWall, 64).unwrap();
        assert_eq!(g.obstacles.len(), 1);
        assert_eq!(g.obstacles[0].vertices, vec![[0.9, 0.0], [1.1, 0.0], [1.1, 0.6], [0.9, 0.6]]);
        assert_eq!((g.length, g.height), (4.0, 2.0));
        assert!((g.solid_area() - 0.12).abs() < 1e-14);
    }

    #[test]
    fn no_obstacle_is_plain_channel() {
        let g = make_geometry(CaseId::NoObstacle, 64).unwrap();
        assert!(g.obstacles.is_empty());
    }

    #[test]
    fn disk_vertices_sit_on_the_circle() {
        let g = make_geometry(CaseId::TwoObstacles, 64).unwrap();
        let disk = &g.obstacles[1];
        assert_eq!(disk.vertices.len(), 64);
        for v in &disk.vertices {
            let r = ((v[0] - 3.0).powi(2) + (v[1] - 1.5).powi(2)).sqrt();
            assert!((r - 0.3).abs() <= 1e-12, "radius {r}");
        }
    }

    #[test]
    fn too_few_circle_segments_is_rejected() {
        assert!(matches!(make_geometry(CaseId::TwoObstacles, 8), Err(Error::Config(_))));
        // Other cases ignore the segment count.
        assert!(make_geometry(CaseId::BoxWall, 3).is_ok());
    }

    #[test]
    fn unknown_case_is_a_config_error() {
        assert!(matches!("pentagon".parse::<CaseId>(), Err(Error::Config(_))));
        assert_eq!("box_wall".parse::<CaseId>().unwrap(), CaseId::BoxWall);
        assert_eq!("TwoObstacles".parse::<CaseId>().unwrap(), CaseId::TwoObstacles);
    }

    #[test]
    fn sharp_corner_has_eight_reflex_corners() {
        let g = make_geometry(CaseId::SharpCorner, 64).unwrap();
        let v = &g.obstacles[0].vertices;
        let n = v.len();
        let reflex = (0..n)
            .filter(|&i| orient(v[(i + n - 1) % n], v[i], v[(i + 1) % n]) < 0.0)
            .count();
        assert_eq!(reflex, 8);
        assert!(v.contains(&[1.5, 1.2]));
    }

    #[test]
    fn overlapping_obstacles_fail_validation() {
        let mut g = make_geometry(CaseId::BoxWall, 64).unwrap();
        g.obstacles.push(Obstacle {
            id: 2,
            vertices: vec![[1.0, 0.3], [1.5, 0.3], [1.5, 0.5], [1.0, 0.5]],
        });
        assert!(g.validate().is_err());
    }
}
